import pytest
from hypothesis import HealthCheck, settings

from btsynth import bundled
from btsynth.btxml import parse_bt_xml

settings.register_profile(
    "det",
    derandomize=True,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("det")

BUNDLED_NAMES = ("area_survey", "door_open", "pick_place", "recharge_dock", "uav_patrol")

# Table 2's XML body, properly nested (the paper's self-closed control
# elements are a typesetting artifact), keeping its single quotes and the
# spaces around '='.
TABLE2_XML = """\
<Fallback instance_name = 'fallback_node'>
  <Sequence instance_name = 'sequence_node'>
    <Condition instance_name = 'check-target_detected'/>
    <Action instance_name = 'warn-target' />
  </Sequence>
  <Action instance_name = 'move-to_next-pos'/>
</Fallback>
"""


@pytest.fixture(scope="session")
def uav():
    return bundled.load("uav_patrol")


@pytest.fixture(scope="session")
def table2_tree():
    return parse_bt_xml(TABLE2_XML)


@pytest.fixture(scope="session", params=BUNDLED_NAMES)
def bundled_pair(request):
    return bundled.load(request.param)
