import os
import stat
import sys
import textwrap
import threading

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ctxmonkey.device import EmulatorBackend, EmulatorConsole, SimConsoleServer, SimRule
from ctxmonkey.device.base import ConsoleResponse, event_commands
from ctxmonkey.errors import AuthRequired, ConnectionLost, InjectionError, InstallError, LaunchError
from ctxmonkey.logparse import parse_logcat_line
from ctxmonkey.scenario import VOCABULARY, ContextualEvent, EventKind

from .conftest import EDIT, MAIN, PKG, make_sim

K = EventKind


def ev(kind, value, index=0, interval=1):
    return ContextualEvent(kind, index, interval, value)


# command map


@given(st.sampled_from([(k, v) for k in EventKind for v in VOCABULARY[k]]))
def test_every_vocabulary_value_maps_to_commands(kv):
    kind, value = kv
    cmds = event_commands(ev(kind, value))
    assert cmds
    want = "console" if kind in (K.NetworkStatus, K.NetworkDelay, K.GsmProfile) else "shell"
    assert {c.channel for c in cmds} == {want}
    assert all(value in str(c) or kind in (K.UserRotation, K.AirplaneMode) for c in cmds)


def test_command_examples():
    assert [str(c) for c in event_commands(ev(K.NetworkStatus, "lte"))] == ["network speed lte"]
    assert [str(c) for c in event_commands(ev(K.GsmProfile, "roaming"))] == ["gsm data roaming", "gsm voice roaming"]
    assert [str(c) for c in event_commands(ev(K.GsmProfile, "off"))] == ["gsm data off"]
    assert [str(c) for c in event_commands(ev(K.UserRotation, "ROTATION_REVERSE_LANDSCAPE"))] == [
        "settings put system accelerometer_rotation 0",
        "settings put system user_rotation 3",
    ]
    assert [str(c) for c in event_commands(ev(K.KeyPress, "KEYCODE_BACK"))] == ["input keyevent KEYCODE_BACK"]
    assert str(event_commands(ev(K.AirplaneMode, "on"))[0]) == "settings put global airplane_mode_on 1"


def test_console_response_from_lines():
    assert ConsoleResponse.from_lines(["a", "OK"]) == ConsoleResponse(True, ["a"])
    bad = ConsoleResponse.from_lines(["KO: nope"])
    assert not bad.ok and bad.error == "KO: nope"
    with pytest.raises(ValueError):
        ConsoleResponse.from_lines(["dangling"])


# simulator console / shell


def test_sim_console_ok_and_ko():
    sim = make_sim()
    assert sim.console_command("network speed lte").ok
    assert sim.state["network_speed"] == "lte"
    assert not sim.console_command("network speed warp9").ok
    assert not sim.console_command("power capacity 5").ok


def test_empty_console_command_is_noop():
    sim = make_sim()
    assert sim.console_command("   ") == ConsoleResponse(True, [])
    assert sim.commands == []


def test_gsm_home_reads_back():
    sim = make_sim()
    sim.apply_event(ev(K.GsmProfile, "home"))
    assert sim.state["gsm_data"] == "home" and sim.state["gsm_voice"] == "home"


def test_rotation_and_airplane_state():
    sim = make_sim()
    sim.apply_event(ev(K.UserRotation, "ROTATION_LANDSCAPE"))
    assert sim.state["system.user_rotation"] == "1" and sim.landscape
    sim.apply_event(ev(K.AirplaneMode, "on"))
    assert sim.state["global.airplane_mode_on"] == "1"
    sim.apply_event(ev(K.KeyPress, "KEYCODE_HOME"))
    assert sim.keys == ["KEYCODE_HOME"]


def test_failed_command_raises_injection_error():
    sim = make_sim()
    sim.console_command = lambda cmd: ConsoleResponse(False, ["KO: busy"])
    with pytest.raises(InjectionError, match="busy"):
        sim.apply_event(ev(K.NetworkDelay, "gprs"))


# packages and launch


def test_install_is_always_fresh():
    sim = make_sim()
    sim.install("app.apk", PKG)
    assert sim.package_log == [("uninstall", PKG), ("install", PKG)]
    sim.uninstall(PKG)
    assert not sim.is_installed(PKG)
    sim.install("app.apk", PKG)
    assert sim.package_log[-1] == ("install", PKG)
    assert sim.package_log.count(("uninstall", PKG)) == 2


def test_install_without_apk():
    with pytest.raises(InstallError):
        make_sim().install("", PKG)


def test_launch_emits_markers():
    sim = make_sim()
    sim.launch_activity(PKG, MAIN)
    sim.launch_activity(PKG, EDIT)
    msgs = [parse_logcat_line(l).message for l in sim.logcat]
    assert msgs[0].startswith("Start proc 4242:com.example.notes")
    assert msgs[1:] == [f"START u0 {{cmp={PKG}/{MAIN}}} from uid 2000", f"START u0 {{cmp={PKG}/{EDIT}}} from uid 2000"]


def test_launch_errors():
    sim = make_sim(installed=False)
    with pytest.raises(LaunchError):
        sim.launch_activity(PKG, MAIN)
    sim = make_sim()
    with pytest.raises(LaunchError):
        sim.launch_activity(PKG, f"{PKG}.Nope")


# rules and logcat


def test_event_rule_fires_on_nth_match_only():
    sim = make_sim(rules=[SimRule("W", "slow", after_events=2, kind=K.KeyPress)])
    sim.launch_activity(PKG, MAIN)
    for _ in range(4):
        sim.apply_event(ev(K.KeyPress, "KEYCODE_BACK"))
    assert [parse_logcat_line(l).message for l in sim.logcat].count("slow") == 1


def test_fatal_rule_emits_crash_block_and_kills_app():
    sim = make_sim(rules=[SimRule("F", "java.lang.RuntimeException: x")])
    sim.launch_activity(PKG, MAIN)
    sim.apply_event(ev(K.KeyPress, "KEYCODE_BACK"))
    entries = [parse_logcat_line(l) for l in sim.logcat]
    assert ("AndroidRuntime", "FATAL EXCEPTION: main") in [(e.tag, e.message) for e in entries]
    assert sim.crashed and not sim.app_alive


def test_timed_rule_advances_with_virtual_clock():
    sim = make_sim(rules=[SimRule("E", "late", after_secs=5)])
    sim.launch_activity(PKG, MAIN)
    cancel = threading.Event()
    sim.sleep(4, cancel)
    assert "late" not in "".join(sim.logcat)
    sim.sleep(2, cancel)
    (line,) = [l for l in sim.logcat if "late" in l]
    assert parse_logcat_line(line).timestamp.second == 35  # start 00:36:30 + 5s


def test_logcat_clear_stream_and_close():
    sim = make_sim()
    sim.launch_activity(PKG, MAIN)
    sim.logcat_clear()
    stream = sim.logcat_stream()
    got = []
    t = threading.Thread(target=lambda: got.extend(stream))
    t.start()
    sim.apply_event(ev(K.KeyPress, "KEYCODE_BACK"))
    sim.launch_activity(PKG, EDIT)
    sim.sleep(0, threading.Event())  # barrier: reader has consumed everything
    assert len(got) == 1 and "START" in got[0]
    stream.close()
    t.join(2)
    assert not t.is_alive() and stream.error is None


def test_dropped_logcat_sets_error():
    sim = make_sim()
    stream = sim.logcat_stream()
    sim.drop_logcat()
    assert list(stream) == [] and stream.error == "connection lost"


# ui


def test_dump_and_input():
    sim = make_sim(fields=3)
    sim.launch_activity(PKG, MAIN)
    xml = sim.ui_dump()
    assert xml.count('editable="true"') == 3
    sim.focus_at(10, 150)  # second 100px field
    sim.input_text("abc")
    assert sim.input_counts == {f"{PKG}:id/field_1": 1}
    sim.focus_at(10, 1900)  # empty space below the fields
    sim.input_text("lost")
    assert sim.lost_inputs == 1


def test_scroll_reaches_fixpoint():
    sim = make_sim(fields=40)
    sim.launch_activity(PKG, MAIN)
    offsets = []
    for _ in range(10):
        sim.scroll_down()
        offsets.append(sim.scroll_offset)
    assert offsets[-1] == offsets[-2] == 40 * 100 - 1920
    assert offsets == sorted(offsets)


def test_rotation_resets_scroll_and_focus():
    sim = make_sim(fields=40)
    sim.launch_activity(PKG, MAIN)
    sim.scroll_down()
    sim.focus_at(10, 10)
    sim.apply_event(ev(K.UserRotation, "ROTATION_LANDSCAPE"))
    assert sim.scroll_offset == 0 and sim.focused is None
    assert sim.viewport == (1920, 1080)


# real console client against the simulated server


def test_console_client_round_trip():
    sim = make_sim()
    with SimConsoleServer(sim) as server, EmulatorConsole("127.0.0.1", server.port, timeout=5) as console:
        assert console.command("network delay umts").ok
        assert not console.command("network delay never").ok
        assert console.command("").ok
    assert sim.state["network_delay"] == "umts"


def test_console_auth():
    sim = make_sim()
    with SimConsoleServer(sim, token="s3cret") as server:
        with pytest.raises(AuthRequired):
            EmulatorConsole("127.0.0.1", server.port, timeout=5).connect()
        with pytest.raises(AuthRequired):
            EmulatorConsole("127.0.0.1", server.port, token="wrong", timeout=5).connect()
        with EmulatorConsole("127.0.0.1", server.port, token="s3cret", timeout=5) as console:
            assert console.command("gsm data roaming").ok
    assert sim.state["gsm_data"] == "roaming"


def test_console_unreachable():
    with SimConsoleServer(make_sim()) as server:
        port = server.port
    with pytest.raises(ConnectionLost):
        EmulatorConsole("127.0.0.1", port, timeout=1).connect()


# adb backend with a fake adb executable

FAKE_ADB = textwrap.dedent(
    """\
    #!{python}
    import os, sys
    args = sys.argv[1:]
    with open(os.environ["FAKE_ADB_LOG"], "a") as f:
        f.write(" ".join(args) + "\\n")
    rest = args[2:]  # drop -s SERIAL
    if rest[:3] == ["shell", "pm", "path"]:
        if os.path.exists(os.environ["FAKE_ADB_LOG"] + ".installed"):
            print("package:/data/app/base.apk")
        else:
            sys.exit(1)
    elif rest[:1] == ["install"]:
        open(os.environ["FAKE_ADB_LOG"] + ".installed", "w").close()
        print("Success")
    elif rest[:1] == ["uninstall"]:
        os.remove(os.environ["FAKE_ADB_LOG"] + ".installed")
        print("Success")
    elif rest[:3] == ["shell", "wm", "size"]:
        print("Physical size: 1080x1920")
    elif rest[:2] == ["exec-out", "cat"]:
        print("junk<hierarchy rotation='0'><node class='EditText' bounds='[0,0][10,10]'/></hierarchy>")
    elif rest[:3] == ["shell", "am", "start"]:
        if "Bad" in rest[-1]:
            print("Error: Activity class does not exist.")
    elif rest[:1] == ["logcat"] and rest[1:] != ["-c"]:
        print("03-19 00:36:40.123  1  1 I Tag: hello")
        sys.exit(3)
    """
)


@pytest.fixture
def fake_adb(tmp_path, monkeypatch):
    path = tmp_path / "adb"
    path.write_text(FAKE_ADB.format(python=sys.executable))
    path.chmod(path.stat().st_mode | stat.S_IEXEC)
    log = tmp_path / "calls.log"
    monkeypatch.setenv("FAKE_ADB_LOG", str(log))
    backend = EmulatorBackend(str(path), EmulatorConsole(port=5556), timeout=30)
    return backend, log


def test_adb_backend_commands(fake_adb):
    backend, log = fake_adb
    assert backend.serial == "emulator-5556"
    backend.install("app.apk", PKG)
    assert backend.is_installed(PKG)
    backend.install("app.apk", PKG)  # reinstall uninstalls first
    backend.launch_activity(PKG, MAIN)
    with pytest.raises(LaunchError):
        backend.launch_activity(PKG, f"{PKG}.Bad")
    assert backend.ui_dump().startswith("<hierarchy")
    backend.scroll_down()
    backend.input_text("a b")
    assert backend.shell(["settings", "put", "system", "user_rotation", "1"]).ok
    calls = [l.split()[2:] for l in log.read_text().splitlines()]
    assert ["install", "app.apk"] in calls
    assert calls.index(["uninstall", PKG]) < len(calls) - calls[::-1].index(["install", "app.apk"]) - 1
    assert ["shell", "input", "swipe", "540", "1440", "540", "480", "400"] in calls
    assert ["shell", "input", "text", "a%sb"] in calls


def test_adb_logcat_exit_sets_error(fake_adb):
    backend, _ = fake_adb
    stream = backend.logcat_stream()
    assert list(stream) == ["03-19 00:36:40.123  1  1 I Tag: hello"]
    assert "exited with 3" in stream.error


@pytest.mark.skipif(os.name != "posix", reason="needs an executable script")
def test_adb_missing_hierarchy(tmp_path, monkeypatch):
    script = tmp_path / "adb"
    script.write_text("#!/bin/sh\necho nothing\n")
    script.chmod(0o755)
    from ctxmonkey.errors import DumpError

    with pytest.raises(DumpError):
        EmulatorBackend(str(script)).ui_dump()
