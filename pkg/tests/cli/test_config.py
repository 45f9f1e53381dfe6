import pytest

from cxflow.cli import ScenarioConfig, dump_manifest, manifest_entries, parse_config, parse_config_text
from cxflow.common.enums import Approach, ControllerKind, EventKind
from cxflow.common.exceptions import ConfigError

SITE = """
# three arm site
intersection.approaches = N, S, E
demand.counts.N-C = 300       # v/h
demand.rv_rate = 0.6
controller.kind = notl
controller.checkpoint = "runs/a b#1.cxf"
events.0.kind = rv_drop
events.0.at_step = 200
events.0.target_rate = 0.2
horizon = 500
"""


def test_empty_text_gives_defaults():
    config = parse_config_text("")
    assert config == ScenarioConfig()
    assert config.controller.kind == ControllerKind.TL
    assert config.comm is None


def test_parse_site():
    config = parse_config_text(SITE)
    assert config.intersection.approaches == [Approach.N, Approach.S, Approach.E]
    assert config.demand.counts == {"N-C": 300.0}
    assert config.controller.checkpoint == "runs/a b#1.cxf"
    assert config.events[0].kind == EventKind.RV_DROP
    assert config.events[0].target_rate == 0.2
    assert config.horizon == 500


def test_parse_file(tmp_path):
    path = tmp_path / "site.cfg"
    path.write_text("seed = 7\nrepeats = 3\n")
    config = parse_config(path)
    assert (config.seed, config.repeats) == (7, 3)


def test_missing_file():
    with pytest.raises(ConfigError, match="cannot read config"):
        parse_config("/nonexistent/site.cfg")


# ==================== Errors ====================


def test_invalid_value_names_key_and_line():
    with pytest.raises(ConfigError) as info:
        parse_config_text("horizon = 10\ndemand.rv_rate = 1.4\n")
    assert info.value.key == "demand.rv_rate"
    assert info.value.line == 2
    assert str(info.value).startswith("demand.rv_rate (line 2): ")


def test_unknown_key():
    with pytest.raises(ConfigError, match="unknown key") as info:
        parse_config_text("demand.bogus = 1")
    assert info.value.key == "demand.bogus"
    assert info.value.line == 1


def test_duplicate_key():
    with pytest.raises(ConfigError, match="first set on line 1") as info:
        parse_config_text("seed = 1\nseed = 2")
    assert info.value.line == 2


@pytest.mark.parametrize(
    "text, message",
    [
        ("horizon 10", "expected 'key = value'"),
        ("demand..rv_rate = 1", "malformed key"),
        ("horizon = 10\nhorizon.x = 1", "both a value and a section"),
        ("events.1.kind = blackout\nevents.1.at_step = 3", "list indices must run"),
    ],
)
def test_malformed_text(text, message):
    with pytest.raises(ConfigError, match=message):
        parse_config_text(text)


def test_event_checks_apply():
    with pytest.raises(ConfigError, match="target_rate is required"):
        parse_config_text("events.0.kind = rv_drop\nevents.0.at_step = 3")


# ==================== Manifest ====================


def test_manifest_parses_back():
    config = parse_config_text(SITE + "comm.per = 0.3\nlearn.hidden = 16, 8\n")
    manifest = dump_manifest(config, {"axis": "per"})
    assert manifest.startswith("# cxflow ")
    assert "# axis: per\n" in manifest
    assert parse_config_text(manifest) == config


def test_manifest_entries_are_sorted():
    keys = [key for key, _ in manifest_entries(ScenarioConfig())]
    assert keys == sorted(keys)
    assert ("controller.kind", "tl") in manifest_entries(ScenarioConfig())
