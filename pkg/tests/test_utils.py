"""Тесты вспомогательных модулей: ошибки, логирование, зёрна, пул процессов"""
import json
import logging
import math

import numpy as np
import pytest
from pydantic import ValidationError

from risradar.constants import ExitCode, RngStream
from risradar.models.scene import PathSpec
from risradar.utils.batching import batch_process
from risradar.utils.errors import (
    ConfigurationError,
    DataMismatchError,
    EigenConvergenceError,
    InvalidArgumentError,
    NonFiniteError,
    PeaksMergedError,
    TrainingError,
    exit_code_for,
    get_user_friendly_message,
    handle_validation_error,
)
from risradar.utils.logging_setup import JSONFormatter
from risradar.utils.seeding import derive_rng


@pytest.mark.parametrize("error,code", [
    (ConfigurationError("x"), ExitCode.CONFIG_ERROR),
    (InvalidArgumentError("x"), ExitCode.CONFIG_ERROR),
    (DataMismatchError("x"), ExitCode.DATA_MISMATCH),
    (PeaksMergedError("x"), ExitCode.DATA_MISMATCH),
    (EigenConvergenceError(1.0, 3), ExitCode.DATA_MISMATCH),
    (TrainingError("x"), ExitCode.TRAINING_FAILURE),
    (NonFiniteError("x"), ExitCode.TRAINING_FAILURE),
    (RuntimeError("x"), ExitCode.FAILURE),
])
def test_exit_codes(error, code):
    assert exit_code_for(error) is code


def test_validation_error_path_with_context():
    with pytest.raises(ValidationError) as info:
        PathSpec.model_validate({"angle_deg": 10.0})
    error = handle_validation_error(info.value, context="target")
    assert error.field_path == "target.range_m"
    assert "target.range_m" in str(error)


def test_user_friendly_messages():
    assert "поле scene.n_symbols" in get_user_friendly_message(ConfigurationError("плохо", "scene.n_symbols"))
    assert "20.000°" in get_user_friendly_message(PeaksMergedError("слились", peak_angle_deg=20.0))
    assert get_user_friendly_message(RuntimeError("")) == "Произошла ошибка."


def test_json_formatter_includes_extra_fields():
    record = logging.LogRecord("risradar.test", logging.INFO, __file__, 10, "сообщение %s", ("1",), None)
    record.trial = 3
    entry = json.loads(JSONFormatter().format(record))
    assert entry["message"] == "сообщение 1"
    assert entry["level"] == "INFO"
    assert entry["trial"] == 3


def test_derived_streams_are_reproducible_and_independent():
    first = derive_rng(7, RngStream.NOISE, 2).standard_normal(5)
    again = derive_rng(7, RngStream.NOISE, 2).standard_normal(5)
    other_frame = derive_rng(7, RngStream.NOISE, 3).standard_normal(5)
    other_stream = derive_rng(7, RngStream.RIS_INIT, 2).standard_normal(5)
    assert np.array_equal(first, again)
    assert not np.array_equal(first, other_frame)
    assert not np.array_equal(first, other_stream)


@pytest.mark.parametrize("workers", [1, 2])
def test_batch_process_keeps_order_and_reports_failures(workers):
    failures = []
    results = batch_process([4.0, 9.0, -1.0, 16.0], math.sqrt, max_workers=workers,
                            error_handler=lambda item, error: failures.append(item))
    assert results == [2.0, 3.0, None, 4.0]
    assert failures == [-1.0]
