import importlib
import sys

import pytest

import clarify_timing.analysis
from clarify_timing.cli.commands import cmd_analyze
from clarify_timing.exceptions import HarnessImportError, PandasImportError, ScipyImportError


def test_pandas_import(monkeypatch):
    monkeypatch.setitem(sys.modules, "pandas", None)
    with pytest.raises(PandasImportError):
        importlib.reload(clarify_timing.analysis)


def test_scipy_import(monkeypatch):
    monkeypatch.setitem(sys.modules, "scipy", None)
    with pytest.raises(ScipyImportError, match="analysis` extra"):
        importlib.reload(clarify_timing.analysis)


def test_analyze_command_reports_missing_extra(monkeypatch, tmp_path):
    monkeypatch.setitem(sys.modules, "pandas", None)
    monkeypatch.delitem(sys.modules, "clarify_timing.analysis")
    with pytest.raises(HarnessImportError):
        cmd_analyze(tmp_path)
