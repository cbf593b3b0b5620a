import importlib.util
from pathlib import Path

from adaptive_parareal.version import APP_VERSION


def _load_version_module():
    script_path = Path(__file__).resolve().parents[1] / "scripts" / "check_version_consistency.py"
    spec = importlib.util.spec_from_file_location("check_version_consistency", script_path)
    assert spec and spec.loader
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def test_repository_sources_are_consistent(capsys, monkeypatch):
    module = _load_version_module()
    monkeypatch.delenv("EXPECTED_VERSION", raising=False)
    assert module.load_app_version() == APP_VERSION
    assert module.main() == 0
    assert f"APP_VERSION={APP_VERSION}" in capsys.readouterr().out


def test_changelog_must_lead_with_current_release():
    module = _load_version_module()
    changelog = "# 변경 이력\n\n## [Unreleased]\n\n## [0.2.0] - 2026-10-01\n\n## [0.1.0] - 2026-09-01\n"
    assert module.check_changelog(changelog, "0.2.0") == []
    errors = module.check_changelog(changelog, "0.1.0")
    assert any("Found [0.2.0], expected [0.1.0]" in error for error in errors)
    assert module.check_changelog("## [0.1.0]\n", "0.1.0") == [
        "docs/CHANGELOG.md must contain section: ## [Unreleased]"
    ]


def test_hardcoded_package_version_is_rejected():
    module = _load_version_module()
    errors = module.check_sources('__version__ = "9.9.9"\n', "parser.add_argument('--version')")
    assert len(errors) == 3


def test_expected_version_mismatch_fails(monkeypatch):
    module = _load_version_module()
    monkeypatch.setenv("EXPECTED_VERSION", "99.0.0")
    assert module.main() == 1
