import logging

import pytest

from zevrpp import utils


def test_relative_difference_falls_back_to_absolute_at_zero() -> None:
    assert utils.relative_difference(1.1, 1.0) == pytest.approx(0.1)
    assert utils.relative_difference(-2.0, -4.0) == pytest.approx(0.5)
    assert utils.relative_difference(1e-3, 0.0) == pytest.approx(1e-3)


def test_file_stem() -> None:
    assert utils.file_stem("toy_shuttle", "S1") == "toy_shuttle_S1"
    assert utils.file_stem("baltic sea", "M4/x") == "baltic-sea_M4-x"
    assert utils.file_stem("", " ") == "unnamed"


def test_timer_logs_and_keeps_elapsed(caplog: pytest.LogCaptureFixture) -> None:
    with caplog.at_level(logging.INFO, logger="zevrpp.utils"):
        with utils.timer("barrier solve") as watch:
            pass

    assert watch.stopped is not None
    assert watch.elapsed == watch.stopped - watch.started >= 0
    assert "Barrier solve completed in" in caplog.text
