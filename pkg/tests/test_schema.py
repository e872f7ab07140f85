import json

import pytest
from hypothesis import given, strategies as st

from lusbio.schema import (
    CANONICAL_SCHEMA,
    BiomarkerSchema,
    InvalidInputError,
    TrainConfig,
    bin_sf_ratio,
    validate_annotation,
)


class TestSchema:
    def test_canonical_cardinalities(self):
        cards = [c for _, c in CANONICAL_SCHEMA.categories]
        assert cards == [5, 5, 3, 4, 3, 5, 5, 5, 3]
        assert len(CANONICAL_SCHEMA.categories) == 9
        assert CANONICAL_SCHEMA.total_features == 38

    def test_category_names(self):
        names = [n for n, _ in CANONICAL_SCHEMA.categories]
        assert names[0] == "A-line"
        assert names[-1] == "Effusion"

    def test_document_round_trip(self):
        doc = CANONICAL_SCHEMA.to_document()
        assert doc["total_features"] == 38
        again = BiomarkerSchema.from_document(json.loads(json.dumps(doc)))
        assert again == CANONICAL_SCHEMA

    def test_document_version_mismatch(self):
        doc = CANONICAL_SCHEMA.to_document()
        doc["schema_version"] = "0.9"
        with pytest.raises(InvalidInputError):
            BiomarkerSchema.from_document(doc)

    def test_feature_index(self):
        assert list(CANONICAL_SCHEMA.feature_index("A-line")) == [0, 1, 2, 3, 4]
        assert list(CANONICAL_SCHEMA.feature_index("Effusion")) == [35, 36, 37]


class TestBinSfRatio:
    def test_paper_examples(self):
        assert bin_sf_ratio(450) == 0
        assert bin_sf_ratio(100) == 3

    def test_boundary_convention(self):
        # boundary values fall in the sicker (higher-index) bin
        expected = {100: 3, 180: 3, 181: 2, 275: 2, 276: 1, 430: 1, 431: 0, 450: 0}
        for sf, b in expected.items():
            assert bin_sf_ratio(sf) == b, sf

    def test_invalid_inputs(self):
        for bad in (0, -5, float("nan"), float("inf")):
            with pytest.raises(InvalidInputError):
                bin_sf_ratio(bad)

    @given(st.floats(min_value=0.01, max_value=1000))
    def test_monotone_and_total(self, sf):
        b = bin_sf_ratio(sf)
        assert b in (0, 1, 2, 3)
        # monotone non-decreasing as sf decreases
        assert bin_sf_ratio(sf * 0.5) >= b


class TestValidateAnnotation:
    def test_all_zeros_valid(self):
        assert validate_annotation([0] * 38).ok

    def test_length_37_invalid(self):
        result = validate_annotation([0] * 37)
        assert not result.ok
        assert "length" in result.issues[0].reason

    def test_non_binary_indexed(self):
        vec = [0] * 38
        vec[3] = 0.5
        result = validate_annotation(vec)
        assert not result.ok
        assert result.issues[0].index == 3


class TestTrainConfig:
    def test_defaults(self):
        tc = TrainConfig()
        assert tc.learning_rate == 0.0001
        assert tc.batch_size == 4
        assert tc.epochs == 100
        assert tc.plateau_factor == 0.5
        assert tc.clip_count_eval == 4
        assert tc.frames_per_clip == 15
        assert tc.shift_fraction == 1 / 8
        assert tc.shift_channels == 8

    def test_shift_fraction_must_divide(self):
        with pytest.raises(InvalidInputError):
            TrainConfig(channels=30, shift_fraction=1 / 8)

    def test_round_trip(self):
        tc = TrainConfig(frame_side=16, channels=32)
        assert TrainConfig.from_json(json.loads(json.dumps(tc.to_json()))) == tc
