import io

import numpy as np
import pytest

from critsync.bubble import BubbleSpec, bubbleValue, far_field_ratio, syncProfile, write_profile_csv
from critsync.errors import ValidationError

SPEC = BubbleSpec(3, 0.5)


def test_values():
    assert bubbleValue(SPEC, 0.0) == pytest.approx(6.0)
    assert bubbleValue(SPEC, 1.0) == pytest.approx(3.0)
    assert np.allclose(bubbleValue(SPEC, [0.0, 1.0]), [6.0, 3.0])


def test_far_field():
    assert far_field_ratio(SPEC, 1e6) == pytest.approx(1.0, rel=1e-9)
    other = BubbleSpec(5, 0.3)
    assert far_field_ratio(other, 1e5) == pytest.approx(1.0, rel=1e-8)


def test_monotone_decay():
    r = np.linspace(0, 50, 200)
    assert np.all(np.diff(bubbleValue(SPEC, r)) < 0)


def test_profiles():
    assert np.allclose(syncProfile([2 / 3, 2 / 3], SPEC, [0.0]), [[4.0, 4.0]])
    assert np.allclose(syncProfile([1 / 7, 2 / 7], SPEC, [1.0]), [[3 / 7, 6 / 7]])
    tab = syncProfile([1.0, 1.0, 1.0], SPEC, np.linspace(0, 3, 7))
    assert np.allclose(tab[:, 0], tab[:, 2])


def test_errors():
    with pytest.raises(ValidationError):
        BubbleSpec(1, 0.5)
    with pytest.raises(ValidationError):
        bubbleValue(SPEC, -1.0)
    with pytest.raises(ValidationError):
        syncProfile([1.0, 0.0], SPEC, [0.0])


def test_csv_round_trip():
    buf = io.StringIO()
    radii = [0.0, 0.1]
    write_profile_csv(buf, radii, syncProfile([1.0, 2.0], SPEC, radii))
    lines = buf.getvalue().splitlines()
    assert lines[0] == "r,u1,u2"
    assert float(lines[2].split(",")[2]) == 2.0 * bubbleValue(SPEC, 0.1)
