import pytest

from ctxmonkey.device.sim import SimScreen, SimScript, SimulatedBackend, SimWidget
from ctxmonkey.errors import ParseError
from ctxmonkey.uimodel import Bounds, collect_all_elements, parse_bounds, parse_ui_dump, text_fields

from .conftest import FIXTURES

SEVEN = """<?xml version='1.0' encoding='UTF-8' standalone='yes' ?>
<hierarchy rotation="0">
 <node class="android.widget.FrameLayout" resource-id="" text="" bounds="[0,0][1080,1920]">
  <node class="android.widget.LinearLayout" resource-id="a:id/col" text="" bounds="[0,0][1080,1800]">
   <node class="android.widget.TextView" resource-id="a:id/t1" text="Name" bounds="[0,0][1080,100]"/>
   <node class="android.widget.EditText" resource-id="a:id/name" text="" bounds="[0,100][1080,200]"/>
   <node class="android.widget.TextView" resource-id="a:id/t2" text="Mail" bounds="[0,200][1080,300]"/>
   <node class="android.widget.EditText" resource-id="a:id/mail" text="" bounds="[0,300][1080,400]"/>
  </node>
  <node class="android.widget.Button" resource-id="a:id/ok" text="OK" bounds="[0,1800][1080,1920]"/>
 </node>
</hierarchy>"""


def _node(cls, rid, l, t, r, b):
    return f'<node class="{cls}" resource-id="{rid}" text="" bounds="[{l},{t}][{r},{b}]"/>'


def _doc(*nodes):
    return "<hierarchy>" + "".join(nodes) + "</hierarchy>"


def test_one_edittext():
    snap = parse_ui_dump(_doc(_node("android.widget.EditText", "x", 0, 0, 10, 10)), "A")
    assert len(snap.elements) == 1 and snap.elements[0].editable


def test_bounds_syntax():
    assert parse_bounds("[0,0][1080,1920]") == Bounds(0, 0, 1080, 1920)
    for bad in ("[0,0][1080]", "0,0,1,1", "[5,0][1,1]", "[-1,0][1,1]"):
        with pytest.raises(ParseError):
            parse_bounds(bad)


def test_seven_nodes_document_order():
    snap = parse_ui_dump(SEVEN, "A")
    # hand-enumerated pre-order walk
    assert [e.resource_id for e in snap.elements] == ["", "a:id/col", "a:id/t1", "a:id/name", "a:id/t2", "a:id/mail", "a:id/ok"]
    assert [e.editable for e in snap.elements] == [False, False, False, True, False, True, False]


def test_fixture_file():
    snap = parse_ui_dump((FIXTURES / "ui_dump.xml").read_text(), "A")
    assert len(snap.elements) == 8
    assert [f.resource_id for f in text_fields(snap)] == ["com.example.notes:id/subject", "com.example.notes:id/body"]


def test_editable_attribute_counts():
    xml = _doc('<node class="com.x.CustomInput" resource-id="c" editable="true" bounds="[0,0][1,1]"/>')
    assert parse_ui_dump(xml, "A").elements[0].editable


@pytest.mark.parametrize("xml", ["<hierarchy><node", "not xml", _doc('<node class="x" bounds="oops"/>')])
def test_malformed(xml):
    with pytest.raises(ParseError):
        parse_ui_dump(xml, "A")


def test_text_fields_ordering():
    assert text_fields(parse_ui_dump(_doc(_node("TextView", "a", 0, 0, 1, 1)), "A")) == []
    stacked = _doc(_node("EditText", "low", 0, 500, 10, 600), _node("EditText", "high", 0, 100, 10, 200))
    assert [f.resource_id for f in text_fields(parse_ui_dump(stacked, "A"))] == ["high", "low"]
    # 2x2 grid given in scrambled document order; row-major expected
    grid = _doc(
        _node("EditText", "r1c0", 0, 100, 50, 150),
        _node("EditText", "r0c1", 60, 0, 110, 50),
        _node("EditText", "r1c1", 60, 100, 110, 150),
        _node("EditText", "r0c0", 0, 0, 50, 50),
    )
    assert [f.resource_id for f in text_fields(parse_ui_dump(grid, "A"))] == ["r0c0", "r0c1", "r1c0", "r1c1"]


def test_text_fields_ties_keep_document_order():
    same = _doc(_node("EditText", "first", 0, 0, 10, 10), _node("EditText", "second", 0, 0, 10, 10))
    assert [f.resource_id for f in text_fields(parse_ui_dump(same, "A"))] == ["first", "second"]


def _sim(screen: SimScreen, size=(1080, 1000)) -> SimulatedBackend:
    sim = SimulatedBackend(SimScript(package="p", screen=size, screens={"A": screen}))
    sim.launch_activity("p", "A")
    return sim


def test_non_scrollable_screen_needs_two_dumps():
    sim = _sim(SimScreen.with_fields(3, package="p"))
    snap = collect_all_elements(sim, "A")
    assert sim.dumps == 2
    assert len(text_fields(snap)) == 3 and not snap.truncated


def test_thirty_fields_ten_per_viewport():
    sim = _sim(SimScreen.with_fields(30, package="p"), size=(1080, 1000))
    snap = collect_all_elements(sim, "A")
    ids = [f.resource_id for f in text_fields(snap)]
    assert len(set(ids)) == 30


def test_screen_size_independence():
    small = collect_all_elements(_sim(SimScreen.with_fields(30, package="p"), size=(1080, 500)), "A")
    big = collect_all_elements(_sim(SimScreen.with_fields(30, package="p"), size=(1080, 1000)), "A")
    assert [e.identity for e in small.elements if e.editable] == [e.identity for e in big.elements if e.editable]


def test_uneven_heights_never_skip_a_widget():
    widgets = [SimWidget("android.widget.EditText", f"p:id/w{i}", h) for i, h in enumerate([300, 450, 320, 700, 90, 260, 610])]
    snap = collect_all_elements(_sim(SimScreen(widgets), size=(1080, 1000)), "A")
    assert [f.resource_id for f in text_fields(snap)] == [w.resource_id for w in widgets]


def test_endless_feed_stops_at_guard():
    sim = _sim(SimScreen([], endless=True))
    snap = collect_all_elements(sim, "A", max_scrolls=4)
    assert snap.truncated
    assert sim.dumps == 5
    assert len(snap.elements) > 10
