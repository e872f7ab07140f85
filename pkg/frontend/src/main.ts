import { ApiClient } from "./api.js";
import { createApp } from "./ui.js";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app element");

void createApp(root, new ApiClient(""), window.localStorage);
