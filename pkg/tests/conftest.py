import pytest

# Bernstein-Vazirani with all three assertion forms; used across the suite.
BV_SOURCE = """\
gate oracle x0, x1, x2, y {
    assert-sup y;
    cx x0, y;
    cx x2, y;
}

qreg q[3];
qreg anc[1];
x anc[0];
h q; h anc[0];
oracle q[0], q[1], q[2], anc[0];
h q;
assert-eq q = |101>;
assert-eq anc[0] {
    qreg t[1];
    h t[0];
    z t[0];
}
"""

DEVICE_DOC = {
    "name": "example",
    "gate_error": {"default": 0.001, "cx": 0.01},
    "measurement_error": {"default": 0.02},
}


@pytest.fixture
def bv_source() -> str:
    return BV_SOURCE


@pytest.fixture
def device_doc() -> dict:
    return dict(DEVICE_DOC)
