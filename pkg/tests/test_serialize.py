import numpy as np
import pytest

from privsvm import (
    KernelSpec,
    LINEAR,
    model_to_text,
    record_from_text,
    solve_svmplus,
    solve_wsvm,
)
from privsvm.serialize import SvmPlusRecord, WsvmRecord

from conftest import random_dataset, random_kernel, random_privileged


def test_wsvm_record_round_trip_bit_exact(rng):
    data = random_dataset(rng, 7)
    model = solve_wsvm(data, random_kernel(rng), rng.uniform(0.2, 2.0, 7))
    text = model_to_text(model)
    record = record_from_text(text)
    assert isinstance(record, WsvmRecord)
    assert record.kernel == model.spec
    assert record.b == model.b  # 17 significant digits: exact doubles
    assert record.b_interval == tuple(map(float, model.b_interval))
    idx = np.flatnonzero(model.alpha > 0)
    np.testing.assert_array_equal(record.support_idx, idx)
    np.testing.assert_array_equal(record.support_coef,
                                  model.alpha[idx] * data.y[idx])
    # the text itself is reproducible
    assert record.to_text() == text


def test_svmplus_record_round_trip_bit_exact(rng):
    n = 6
    data = random_dataset(rng, n)
    model = solve_svmplus(data, random_privileged(rng, n), random_kernel(rng),
                          random_kernel(rng), 1.5, 2.0)
    text = model_to_text(model)
    record = record_from_text(text)
    assert isinstance(record, SvmPlusRecord)
    assert record.C == model.C and record.gamma == model.gamma
    assert record.b == model.b and record.b_tilde == model.b_tilde
    tidx = np.flatnonzero(model.alpha_tilde != 0.0)
    np.testing.assert_array_equal(record.alpha_tilde_idx, tidx)
    np.testing.assert_array_equal(record.alpha_tilde_val,
                                  model.alpha_tilde[tidx])
    assert record.to_text() == text


def test_unknown_payloads_rejected():
    with pytest.raises(ValueError, match="tag"):
        record_from_text("mystery-model\nb 0\n")
    with pytest.raises(ValueError, match="empty"):
        record_from_text("")
    with pytest.raises(TypeError, match="serialize"):
        model_to_text(object())
