import pytest

from partsim.errors import ConfigError, ValidationError
from partsim.netsim import AppSpec, gen_car_topology
from partsim.orchestrator import parse_instantiation, parse_system, system_from_topology
from partsim.simtime import MS, US

TWO_HOSTS = """\
seed: 3
end_time: 10ms
hosts:
  - {id: h0, app: {role: client, target: h1, rate: 1000}}
  - {id: h1, app: {role: server}}
switches:
  - {id: s0, ports: 4}
links:
  - {id: l0, endpoints: [h0, s0], latency: 2us, bandwidth: 10Gbps}
  - {id: l1, endpoints: [h1, s0]}
"""


def test_parse_two_hosts():
    cfg = parse_system(TWO_HOSTS)
    assert len(cfg.components) == 5
    assert cfg.seed == 3 and cfg.end_time == 10 * MS
    assert cfg.links[0].latency == 2 * US and cfg.links[1].latency == 1 * US
    assert cfg.host("h0").app == AppSpec("client", target="h1", rate=1000)
    assert cfg.nic_for("h0").id == "nic.h0"
    topo = cfg.topology()
    assert [h.switch for h in topo.hosts] == ["s0", "s0"]


def test_dangling_endpoint_reports_line():
    text = TWO_HOSTS.replace("endpoints: [h1, s0]", "endpoints: [h9, s0]")
    with pytest.raises(ValidationError) as exc:
        parse_system(text, "sys.yaml")
    msgs = [f"{loc}: {m}" for loc, m in exc.value.problems]
    assert any("h9" in m and m.startswith("sys.yaml:10") for m in msgs), msgs


def test_duplicate_id_names_first_definition():
    text = TWO_HOSTS.replace("{id: h1, app", "{id: h0, app")
    with pytest.raises(ValidationError) as exc:
        parse_system(text, "sys.yaml")
    text = str(exc.value)
    assert "duplicate" in text and "h0" in text and "sys.yaml:4" in text


def test_all_problems_reported_together():
    text = TWO_HOSTS.replace("target: h1", "target: nobody").replace("[h1, s0]", "[h1, s7]")
    text = text.replace("{id: s0, ports: 4}", "{id: s0, ports: 4, colour: red}")
    with pytest.raises(ValidationError) as exc:
        parse_system(text)
    assert len(exc.value.problems) >= 3


def test_missing_app_and_bad_values():
    text = TWO_HOSTS.replace("  - {id: h1, app: {role: server}}", "  - {id: h1}")
    with pytest.raises(ValidationError, match="app"):
        parse_system(text)
    with pytest.raises(ValidationError):
        parse_system(TWO_HOSTS.replace("latency: 2us", "latency: soon"))
    with pytest.raises(ValidationError):
        parse_system("- just a list")


def test_round_trip():
    cfg = parse_system(TWO_HOSTS)
    again = parse_system(cfg.dump())
    assert again == cfg
    assert again.dump() == cfg.dump()


def test_generated_topology_round_trip():
    topo = gen_car_topology(2, 2, 2)
    apps = {h.id: AppSpec("sink") for h in topo.hosts}
    apps["h0_0_0"] = AppSpec("client", target="h1_1_1", arrival="poisson")
    cfg = system_from_topology(topo, apps, detailed=["h0_0_0"])
    again = parse_system(cfg.dump())
    assert again == cfg
    assert again.topology().links == topo.links


def test_instantiation_parse():
    inst = parse_instantiation("partition: cr3\ntrunk: false\nprofiling: {enabled: true, interval: 0.5}\n"
                               "fidelity: {h0: detailed}\nmode: inline\n")
    assert inst.strategy() == "cr3" and inst.trunk is False
    assert inst.profiling and inst.profile_interval == 0.5
    assert inst.fidelity == {"h0": "detailed"}
    custom = parse_instantiation("partition: {custom: {s0: 0}}\n")
    assert custom.strategy() == ("custom", {"s0": 0})
    assert parse_instantiation("") .strategy() == "s"


def test_instantiation_problems():
    with pytest.raises(ValidationError):
        parse_instantiation("partition: s\nspeed: fast\n")
    with pytest.raises(ConfigError):
        parse_instantiation("mode: warp\n")
    with pytest.raises(ConfigError):
        parse_instantiation("fidelity: {h0: extreme}\n")
    with pytest.raises(ConfigError):
        parse_instantiation("busy_mode: doze\n")


def test_busy_mode_round_trip():
    inst = parse_instantiation("busy_ns: {net.np2: 5000}\nbusy_mode: sleep\n")
    assert inst.busy_ns == {"net.np2": 5000} and inst.busy_mode == "sleep"
    assert inst.to_dict()["busy_mode"] == "sleep"
    assert parse_instantiation("").busy_mode == "spin"


def test_sync_interval_policies():
    inst = parse_instantiation("sync_interval: 0.5\n")
    assert inst.sync_interval_for(2 * US) == 1 * US
    assert parse_instantiation("sync_interval: 250ns\n").sync_interval_for(2 * US) == 250_000
    assert parse_instantiation("").sync_interval_for(2 * US) == 2 * US
