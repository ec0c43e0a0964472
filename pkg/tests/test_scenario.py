from pathlib import Path

import pytest

from bdmsim.scenario import ScenarioConfig, ScenarioError, load_scenario, parse_scenario

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def test_defaults_are_filled():
    cfg = parse_scenario("stations=10\ncontroller=bdm\n")
    assert cfg.stations == 10 and cfg.controller == "bdm"
    assert (cfg.codec, cfg.ptime_ms, cfg.header) == ("g729", 20, "full")
    assert cfg.duration_s == 30 and cfg.seed == 1
    assert cfg.ber_table[11_000_000] == 1e-4 and cfg.ber_table[1_000_000] == 0.0


def test_comments_and_blank_lines():
    cfg = parse_scenario("# header\n\nstations = 3   # trailing\ncontroller=edca\n")
    assert cfg.stations == 3 and cfg.controller == "edca"


def test_value_forms():
    cfg = parse_scenario("stations=2\ndata_stations=2\ndata_load_bps=saturated\nrts_cts=on\n"
                         "ber=11:1e-3\ndistances=5,10,20,40\nadmission_target_pct=auto\n")
    assert cfg.data_load_bps is None and cfg.rts_cts
    assert cfg.ber_table[11_000_000] == 1e-3 and cfg.ber_table[5_500_000] == 1e-5
    assert cfg.distances == (5.0, 10.0, 20.0, 40.0)


@pytest.mark.parametrize("text, fragment", [
    ("stations=0", "stations"),
    ("controller=edca", "stations: missing"),
    ("stations=2\ncolour=blue", "line 2: colour: unknown key"),
    ("stations=2\nstations=3", "line 2: stations: duplicate"),
    ("stations=two", "line 1: stations"),
    ("stations=2\ncontroller=magic", "line 2: controller"),
    ("stations=2\nfixed_rate_mbps=6", "line 2: fixed_rate_mbps"),
    ("stations=2\nmax_distance_m=60", "line 2: max_distance_m"),
    ("stations=1\ndistances=100", "line 2: distances"),
    ("stations=1\nptime_ms=3\ncodec=g711\nheader=bogus", "header"),
    ("stations=1\nrts_cts=maybe", "line 2: rts_cts"),
    ("stations=1\nno equals sign", "line 2: expected key=value"),
])
def test_parse_errors_name_line_and_key(text, fragment):
    with pytest.raises(ScenarioError) as e:
        parse_scenario(text)
    assert fragment in str(e.value)


def test_text_round_trip():
    cfg = ScenarioConfig(stations=4, controller="fixed", fixed_rate_mbps=5.5, data_load_bps=None,
                         ber=((1_000_000, 0.0), (2_000_000, 0.0), (5_500_000, 3e-5), (11_000_000, 2e-4)),
                         distances=(1.0, 2.5, 3.0, 47.9), talkspurt=True)
    assert parse_scenario(cfg.to_text()) == cfg


def test_shipped_scenarios_parse():
    files = sorted(SCENARIOS.glob("*.cfg"))
    assert files
    for f in files:
        load_scenario(f)
