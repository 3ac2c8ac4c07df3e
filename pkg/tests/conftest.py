import pytest

from ackpolice.adversary import BehaviourPolicy
from ackpolice.policing import ControllerConfig
from ackpolice.scenario import ScenarioConfig, StationSpec


def make_scenario(n_fair=2, mis_kind=None, duration_s=60.0, seed=1, cw=16,
                  policing=True, update_period_s=10.0, alpha=0.1, **kw):
    stations = []
    if mis_kind:
        stations.append(StationSpec(sid="mis",
                                    policy=BehaviourPolicy(kind=mis_kind, cw=cw)))
    stations += [StationSpec(sid=f"fair{i}") for i in range(n_fair)]
    return ScenarioConfig(stations=tuple(stations), duration_s=duration_s,
                          seed=seed, policing_enabled=policing,
                          controller=ControllerConfig(alpha=alpha,
                                                      update_period_s=update_period_s),
                          **kw)


def by_window(trace):
    """station rows pivoted to a time-ordered list of {station: row} dicts."""
    per = {}
    for row in trace.station_rows:
        per.setdefault(row["time_s"], {})[row["station"]] = row
    return [per[t] for t in sorted(per)]


@pytest.fixture
def two_station_cfg():
    return make_scenario(n_fair=1, mis_kind="cwmin_halved", duration_s=30.0)
