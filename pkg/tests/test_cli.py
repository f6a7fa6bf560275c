from __future__ import annotations

import json

import cv2
import numpy as np
import pytest
from click.testing import CliRunner

from framechat.cli import main

from conftest import make_jpeg


@pytest.fixture()
def runner():
    return CliRunner()


def write_reference_script(tmp_path) -> str:
    image = make_jpeg(32, 24)
    for i in range(1, 6):
        (tmp_path / f"f{i}.jpg").write_bytes(image)
    payload = [
        {"n": 3, "m": 2},
        {"at_ms": 0, "frame": "f1.jpg"},
        {"at_ms": 5000, "frame": "f2.jpg"},
        {"at_ms": 10000, "frame": "f3.jpg"},
        {"at_ms": 12000, "say": "what do you see?"},
        {"at_ms": 15000, "frame": "f4.jpg"},
        {"at_ms": 20000, "frame": "f5.jpg"},
    ]
    path = tmp_path / "trace.json"
    path.write_text(json.dumps(payload))
    return str(path)


class TestReplayCommand:
    def test_prints_element_trace_and_exits_zero(self, runner, tmp_path):
        script = write_reference_script(tmp_path)
        result = runner.invoke(main, ["replay", script, "--backend", "mock"])
        assert result.exit_code == 0, result.output
        assert "[S(1,2), F3]" in result.output
        assert "final buffer: [S(1,2), S(3), L, R, F4, F5]" in result.output

    def test_writes_transcript(self, runner, tmp_path):
        script = write_reference_script(tmp_path)
        out = tmp_path / "out.jsonl"
        result = runner.invoke(
            main, ["replay", script, "--backend", "mock", "--transcript", str(out)]
        )
        assert result.exit_code == 0
        assert out.exists()
        assert len(out.read_text().splitlines()) == 1 + 9  # header + events

    def test_invalid_script_fails_cleanly(self, runner, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"no": "events"}')
        result = runner.invoke(main, ["replay", str(bad)])
        assert result.exit_code != 0
        assert "invalid script" in result.output


class TestRunCommand:
    def test_missing_source_is_usage_error(self, runner):
        result = runner.invoke(main, ["run"])
        assert result.exit_code == 2
        assert "--source" in result.output

    def test_directory_source_fast_mode(self, runner, tmp_path):
        for name in ("a.jpg", "b.jpg", "c.jpg"):
            (tmp_path / name).write_bytes(make_jpeg(16, 12))
        result = runner.invoke(
            main,
            [
                "run",
                "--source",
                f"dir:{tmp_path}",
                "--fast",
                "--n",
                "2",
                "--m",
                "1",
                "--interval-ms",
                "100",
            ],
        )
        assert result.exit_code == 0, result.output
        assert "frame 1" in result.output
        assert "summary of frames [1]" in result.output
        assert "final buffer:" in result.output

    def test_video_source(self, runner, tmp_path):
        path = tmp_path / "clip.mp4"
        writer = cv2.VideoWriter(
            str(path), cv2.VideoWriter_fourcc(*"mp4v"), 10.0, (32, 24)
        )
        for index in range(25):  # 2.5 seconds at 10 fps
            writer.write(np.full((24, 32, 3), index * 10, np.uint8))
        writer.release()
        result = runner.invoke(
            main,
            ["run", "--source", f"video:{path}", "--fast", "--interval-ms", "1000"],
        )
        assert result.exit_code == 0, result.output
        assert result.output.count("frame ") == 3  # t = 0, 1000, 2000 ms

    def test_push_source_rejected(self, runner):
        result = runner.invoke(main, ["run", "--source", "push", "--fast"])
        assert result.exit_code == 2
        assert "serve" in result.output

    def test_bad_source_spec(self, runner):
        result = runner.invoke(main, ["run", "--source", "tape:foo"])
        assert result.exit_code == 2

    def test_invalid_policy_flags(self, runner, tmp_path):
        (tmp_path / "a.jpg").write_bytes(make_jpeg(16, 12))
        result = runner.invoke(
            main,
            ["run", "--source", f"dir:{tmp_path}", "--fast", "--n", "2", "--m", "2"],
        )
        assert result.exit_code == 2
        assert "m must be < n" in result.output


class TestChatCommand:
    def test_echoes_agent_reply(self, runner):
        result = runner.invoke(main, ["chat"], input="hi\n")
        assert result.exit_code == 0, result.output
        assert "agent> " in result.output

    def test_http_backend_requires_base_url(self, runner):
        result = runner.invoke(main, ["chat", "--backend", "http"], input="hi\n")
        assert result.exit_code == 2
        assert "--base-url" in result.output


class TestConfigFile:
    def test_config_file_fills_defaults(self, runner, tmp_path):
        for name in ("a.jpg", "b.jpg", "c.jpg"):
            (tmp_path / name).write_bytes(make_jpeg(16, 12))
        config = tmp_path / "framechat.toml"
        config.write_text("n = 2\nm = 1\n")
        result = runner.invoke(
            main,
            [
                "run",
                "--source",
                f"dir:{tmp_path}",
                "--fast",
                "--config",
                str(config),
                "--interval-ms",
                "100",
            ],
        )
        assert result.exit_code == 0, result.output
        assert "summary of frames [1]" in result.output  # n=2 from the file

    def test_flags_win_over_config_file(self, runner, tmp_path):
        for name in ("a.jpg", "b.jpg"):
            (tmp_path / name).write_bytes(make_jpeg(16, 12))
        config = tmp_path / "framechat.json"
        config.write_text('{"n": 2, "m": 1}')
        result = runner.invoke(
            main,
            [
                "run",
                "--source",
                f"dir:{tmp_path}",
                "--fast",
                "--config",
                str(config),
                "--n",
                "4",
                "--m",
                "3",
                "--interval-ms",
                "100",
            ],
        )
        assert result.exit_code == 0, result.output
        assert "summary" not in result.output  # flag n=4 means no trigger at 2 frames
