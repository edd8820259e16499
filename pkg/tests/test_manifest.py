import pytest
from hypothesis import given
from hypothesis import strategies as st

from ctxmonkey.errors import ParseError
from ctxmonkey.manifest import (
    NETWORK_PERMISSIONS,
    AppMetadata,
    applicable_event_kinds,
    parse_badging,
)
from ctxmonkey.scenario import EventKind as K

BASE = {K.UserRotation, K.KeyPress}


def test_fixture_offline(badging_offline):
    m = parse_badging(badging_offline)
    assert m.package_id == "com.example.notes"
    assert m.version_name == "1.2"
    assert m.permissions == {"android.permission.CAMERA", "android.permission.VIBRATE"}
    assert m.activities == ("com.example.notes.MainActivity", "com.example.notes.EditActivity")


def test_internet_permission(badging_net):
    m = parse_badging(badging_net)
    assert "android.permission.INTERNET" in m.permissions


def test_package_line_only():
    m = parse_badging("package: name='a.b' versionCode='1'\n")
    assert m == AppMetadata("a.b", "", frozenset(), ())


def test_missing_package_is_parse_error():
    with pytest.raises(ParseError):
        parse_badging("uses-permission: name='android.permission.INTERNET'\n")


def test_old_style_permission_line():
    m = parse_badging("package: name='a.b'\nuses-permission:'android.permission.INTERNET'\n")
    assert m.permissions == {"android.permission.INTERNET"}


def test_xmltree_activities_deduplicated_in_first_seen_order():
    dump = "\n".join(
        [
            "package: name='org.demo' versionName='2'",
            "launchable-activity: name='org.demo.Home'  label='' icon=''",
            "  E: manifest (line=2)",
            "    E: application (line=5)",
            "      E: activity (line=6)",
            '        A: android:name(0x01010003)=".Home" (Raw: ".Home")',
            "      E: activity (line=9)",
            '        A: android:name(0x01010003)="Settings" (Raw: "Settings")',
            "      E: activity (line=12)",
            '        A: android:name(0x01010003)="org.demo.Home" (Raw: "org.demo.Home")',
            "      E: activity (line=14)",
            '        A: android:name(0x01010003)="org.other.Login" (Raw: "org.other.Login")',
            "      E: service (line=20)",
            '        A: android:name(0x01010003)=".Sync" (Raw: ".Sync")',
        ]
    )
    m = parse_badging(dump)
    # hand-listed: Home (launchable, then twice in manifest), Settings qualified, Login; service ignored
    assert m.activities == ("org.demo.Home", "org.demo.Settings", "org.other.Login")


def test_activity_name_not_taken_from_child_element():
    dump = "\n".join(
        [
            "package: name='org.demo'",
            "      E: activity (line=6)",
            "        A: android:label(0x01010001)=\"x\"",
            "        E: intent-filter (line=7)",
            '          A: android:name(0x01010003)="should.not.Match" (Raw: "x")',
        ]
    )
    assert parse_badging(dump).activities == ()


@pytest.mark.parametrize(
    "perms,expected",
    [
        (set(), BASE),
        ({"android.permission.INTERNET"}, set(K)),
        ({"android.permission.CAMERA"}, BASE),
        ({"android.permission.ACCESS_WIFI_STATE"}, set(K)),
    ],
)
def test_applicable_kinds(perms, expected):
    assert applicable_event_kinds(AppMetadata("x.y", permissions=frozenset(perms))) == expected


perm_sets = st.sets(st.sampled_from(sorted(NETWORK_PERMISSIONS) + ["android.permission.CAMERA", "a.b.C"]))


@given(perm_sets, perm_sets)
def test_applicable_monotone(a, b):
    small = applicable_event_kinds(AppMetadata("x.y", permissions=frozenset(a)))
    big = applicable_event_kinds(AppMetadata("x.y", permissions=frozenset(a | b)))
    assert BASE <= small <= big


@given(st.text())
def test_parse_total(text):
    try:
        m = parse_badging(text)
    except ParseError:
        return
    assert m.package_id
    assert len(set(m.activities)) == len(m.activities)
