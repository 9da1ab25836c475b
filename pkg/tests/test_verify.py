import numpy as np
import pytest

from jmgtlab.errors import DegeneracyError
from jmgtlab.models import ModelKind
from jmgtlab.verify import CheckResult, mms_spatial, observed_orders, run_suites


def test_observed_orders():
    np.testing.assert_allclose(observed_orders([1.0, 0.25, 0.0625]), [2.0, 2.0])
    np.testing.assert_allclose(observed_orders([8.0, 1.0], ratio=2.0), [3.0])


def test_check_line():
    assert CheckResult("x", True, "ok").line() == "[PASS] x: ok"
    assert CheckResult("x", False, "bad").line() == "[FAIL] x: bad"


def test_unknown_suite():
    with pytest.raises(KeyError):
        run_suites(("nope",))


def test_near_critical_jmgt_kuznetsov_blow_up_is_detected():
    # gamma = delta / b ~ 3e-8 where the manufactured solution is at rest (the
    # Dirichlet ends) while psi_x is largest there; once the mesh resolves the
    # unstable modes the gradient term drives the run to alpha <= 0 and the
    # guard stops it instead of returning garbage
    with pytest.raises(DegeneracyError):
        mms_spatial(ModelKind.JMGT_KUZNETSOV, "sine-exp", nonlinear=True, tau=1e-7,
                    amplitude=1e3, rate=5e4, elements=(128,))
    ok = mms_spatial(ModelKind.JMGT_KUZNETSOV, "sine-exp", nonlinear=True, tau=1e-7,
                     amplitude=1e3, rate=5e4, elements=(32,))
    assert ok[0] < 1e-4
