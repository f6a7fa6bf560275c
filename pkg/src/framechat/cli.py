"""Command line front end: live runs, terminal chat, scripted replay, and serving."""

from __future__ import annotations

import json
import sys
import threading
from pathlib import Path

import click

from .backend import BackendConfig, BackendError, HttpBackend, MockBackend
from .context import SummarisationPolicy
from .frames import (
    DEFAULT_DOWNSCALE_LONG_SIDE,
    DEFAULT_INTERVAL_MS,
    FrameDecodeError,
    FrameSourceConfig,
    ResolutionPolicyConfig,
    SourceKind,
    SourceOpenError,
    Ticker,
    open_source,
)
from .server import GatewayConfig, GatewayConfigError, create_app
from .session import (
    EventKind,
    Session,
    SessionConfig,
    load_session_script,
    replay,
    ScriptError,
)


def _load_config_file(path: Path | None) -> dict:
    if path is None:
        return {}
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json":
        return json.loads(text)
    if path.suffix.lower() == ".toml":
        try:
            import tomllib
        except ModuleNotFoundError:
            import tomli as tomllib
        return tomllib.loads(text)
    raise click.UsageError(f"config file must be .toml or .json, got {path.name}")


def _merged(ctx: click.Context, file_cfg: dict, name: str, flag_value):
    """Config file fills in values the user did not pass explicitly; flags win."""
    source = ctx.get_parameter_source(name)
    if source is not None and source.name != "DEFAULT":
        return flag_value
    return file_cfg.get(name, flag_value)


def _parse_source(spec: str, interval_ms: int, max_frames: int | None) -> FrameSourceConfig:
    if spec == "push":
        return FrameSourceConfig(kind=SourceKind.PUSH, interval_ms=interval_ms)
    kind, sep, path = spec.partition(":")
    if not sep or kind not in ("video", "dir"):
        raise click.UsageError(
            f"--source must be 'video:PATH', 'dir:PATH' or 'push', got {spec!r}"
        )
    return FrameSourceConfig(
        kind=SourceKind.VIDEO_FILE if kind == "video" else SourceKind.IMAGE_DIRECTORY,
        interval_ms=interval_ms,
        path=Path(path),
        max_frames=max_frames,
    )


def _build_backend(backend: str, base_url: str | None, model: str, api_key_env: str):
    if backend == "mock":
        return MockBackend()
    if not base_url:
        raise click.UsageError("--base-url is required with --backend http")
    return HttpBackend(
        BackendConfig(base_url=base_url, api_key_env=api_key_env, model_id=model)
    )


def _session_config(
    n: int, m: int, model: str, downscale: int, summary_model: str | None = None
) -> SessionConfig:
    try:
        policy = SummarisationPolicy(n=n, m=m)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from exc
    return SessionConfig(
        policy=policy,
        resolution=ResolutionPolicyConfig(downscale_long_side=downscale),
        model_id=model,
        summary_model_id=summary_model or "",
    )


def _describe_event(event) -> str:
    if event.kind is EventKind.FRAME_ARRIVED:
        p = event.payload
        return f"frame {p['frame_id']} ({p['width']}x{p['height']})"
    if event.kind is EventKind.USER_MESSAGE:
        return f"you> {event.payload['text']}"
    if event.kind is EventKind.AGENT_REPLY:
        return f"agent> {event.payload['text']} ({event.payload['latency_ms']} ms)"
    if event.kind is EventKind.SUMMARY_CREATED:
        covers = ",".join(str(i) for i in event.payload["covers_frame_ids"])
        return f"summary of frames [{covers}]: {event.payload['text']}"
    return f"error [{event.payload['stage']}/{event.payload['kind']}]: {event.payload['detail']}"


_shared_options = [
    click.option("--n", default=4, show_default=True, help="Max frames kept in the prompt."),
    click.option("--m", default=3, show_default=True, help="Frames summarised per pass."),
    click.option(
        "--backend",
        type=click.Choice(["mock", "http"]),
        default="mock",
        show_default=True,
    ),
    click.option("--base-url", default=None, help="OpenAI-compatible endpoint base URL."),
    click.option("--model", default="gpt-4o", show_default=True),
    click.option(
        "--summary-model",
        default=None,
        help="Cheaper model for frame summaries; defaults to --model.",
    ),
    click.option("--api-key-env", default="OPENAI_API_KEY", show_default=True),
    click.option("--transcript", type=click.Path(dir_okay=False, path_type=Path), default=None),
    click.option("--config", "config_path", type=click.Path(exists=True, path_type=Path), default=None),
]


def _with_shared_options(command):
    for option in reversed(_shared_options):
        command = option(command)
    return command


@click.group()
def main() -> None:
    """Vision-enabled dialogue orchestrator."""


@main.command()
@click.option("--source", required=True, help="'video:PATH', 'dir:PATH' or 'push'.")
@click.option("--interval-ms", default=DEFAULT_INTERVAL_MS, show_default=True)
@click.option("--max-frames", default=None, type=int)
@click.option("--downscale", default=DEFAULT_DOWNSCALE_LONG_SIDE, show_default=True)
@click.option("--fast", is_flag=True, help="Skip real-time pacing between frames.")
@_with_shared_options
@click.pass_context
def run(
    ctx: click.Context,
    source: str,
    interval_ms: int,
    max_frames: int | None,
    downscale: int,
    fast: bool,
    n: int,
    m: int,
    backend: str,
    base_url: str | None,
    model: str,
    summary_model: str | None,
    api_key_env: str,
    transcript: Path | None,
    config_path: Path | None,
) -> None:
    """Feed frames from a source at the configured cadence and print events."""
    file_cfg = _load_config_file(config_path)
    n = _merged(ctx, file_cfg, "n", n)
    m = _merged(ctx, file_cfg, "m", m)
    interval_ms = _merged(ctx, file_cfg, "interval_ms", interval_ms)
    backend = _merged(ctx, file_cfg, "backend", backend)
    base_url = _merged(ctx, file_cfg, "base_url", base_url)
    model = _merged(ctx, file_cfg, "model", model)
    summary_model = _merged(ctx, file_cfg, "summary_model", summary_model)

    source_cfg = _parse_source(source, interval_ms, max_frames)
    if source_cfg.kind is SourceKind.PUSH:
        raise click.UsageError("the push source is only meaningful under 'serve'")
    try:
        frame_source = open_source(source_cfg)
    except SourceOpenError as exc:
        raise click.ClickException(str(exc)) from exc
    session = Session(
        _build_backend(backend, base_url, model, api_key_env),
        config=_session_config(n, m, model, downscale, summary_model),
        transcript_path=transcript,
    )
    ticker = Ticker(interval_ms)
    seen = -1
    try:
        while True:
            if not fast:
                ticker.wait()
            capture = frame_source.next_frame()
            if capture is None:
                break
            try:
                session.push_image(capture.data)
            except FrameDecodeError as exc:
                session.record_error("frame", "undecodable", str(exc))
            for event in session.events_after(seen, timeout=0):
                click.echo(_describe_event(event))
                seen = event.seq
        click.echo(f"final buffer: {session.trace()}")
    finally:
        frame_source.close()
        session.close()


@main.command()
@click.option("--source", default=None, help="Optional background frame source.")
@click.option("--interval-ms", default=DEFAULT_INTERVAL_MS, show_default=True)
@click.option("--downscale", default=DEFAULT_DOWNSCALE_LONG_SIDE, show_default=True)
@_with_shared_options
@click.pass_context
def chat(
    ctx: click.Context,
    source: str | None,
    interval_ms: int,
    downscale: int,
    n: int,
    m: int,
    backend: str,
    base_url: str | None,
    model: str,
    summary_model: str | None,
    api_key_env: str,
    transcript: Path | None,
    config_path: Path | None,
) -> None:
    """Interactive terminal chat; type a line, read the agent's reply."""
    file_cfg = _load_config_file(config_path)
    n = _merged(ctx, file_cfg, "n", n)
    m = _merged(ctx, file_cfg, "m", m)
    backend = _merged(ctx, file_cfg, "backend", backend)
    base_url = _merged(ctx, file_cfg, "base_url", base_url)
    model = _merged(ctx, file_cfg, "model", model)
    summary_model = _merged(ctx, file_cfg, "summary_model", summary_model)

    session = Session(
        _build_backend(backend, base_url, model, api_key_env),
        config=_session_config(n, m, model, downscale, summary_model),
        transcript_path=transcript,
    )
    stop = threading.Event()
    feeder = None
    if source:
        source_cfg = _parse_source(source, interval_ms, None)
        frame_source = open_source(source_cfg)

        def feed() -> None:
            ticker = Ticker(interval_ms)
            while not stop.is_set():
                ticker.wait()
                capture = frame_source.next_frame()
                if capture is None:
                    if source_cfg.kind is not SourceKind.PUSH:
                        return
                    continue
                try:
                    session.push_image(capture.data)
                except FrameDecodeError:
                    pass

        feeder = threading.Thread(target=feed, daemon=True)
        feeder.start()
    try:
        for raw in sys.stdin:
            text = raw.strip()
            if not text:
                continue
            try:
                reply = session.handle_user_message(text)
            except BackendError as exc:
                click.echo(f"error> {exc.kind}: {exc}", err=True)
                continue
            click.echo(f"agent> {reply.text}")
    finally:
        stop.set()
        session.close()


@main.command(name="replay")
@click.argument("script", type=click.Path(exists=True, path_type=Path))
@_with_shared_options
@click.pass_context
def replay_command(
    ctx: click.Context,
    script: Path,
    n: int,
    m: int,
    backend: str,
    base_url: str | None,
    model: str,
    summary_model: str | None,
    api_key_env: str,
    transcript: Path | None,
    config_path: Path | None,
) -> None:
    """Replay a session script on logical time and print the element trace."""
    file_cfg = _load_config_file(config_path)
    n = _merged(ctx, file_cfg, "n", n)
    m = _merged(ctx, file_cfg, "m", m)
    backend = _merged(ctx, file_cfg, "backend", backend)
    base_url = _merged(ctx, file_cfg, "base_url", base_url)
    model = _merged(ctx, file_cfg, "model", model)
    summary_model = _merged(ctx, file_cfg, "summary_model", summary_model)

    try:
        parsed = load_session_script(script)
    except ScriptError as exc:
        raise click.ClickException(f"invalid script: {exc}") from exc

    def show(session: Session, event) -> None:
        action = f'say "{event.say}"' if event.say is not None else f"frame {event.frame.name}"
        click.echo(f"t={event.at_ms}ms {action}: {session.trace()}")

    session = replay(
        parsed,
        _build_backend(backend, base_url, model, api_key_env),
        config=_session_config(n, m, model, DEFAULT_DOWNSCALE_LONG_SIDE, summary_model),
        transcript_path=transcript,
        on_event=show,
    )
    click.echo(f"final buffer: {session.trace()}")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8765, show_default=True)
@click.option("--transcript-dir", type=click.Path(file_okay=False, path_type=Path), default=None)
@click.option("--cors", "cors_origins", multiple=True, default=("*",), show_default=True)
@click.option("--static-dir", type=click.Path(file_okay=False, path_type=Path), default=None)
@click.option("--downscale", default=DEFAULT_DOWNSCALE_LONG_SIDE, show_default=True)
@_with_shared_options
@click.pass_context
def serve(
    ctx: click.Context,
    host: str,
    port: int,
    transcript_dir: Path | None,
    cors_origins: tuple[str, ...],
    static_dir: Path | None,
    downscale: int,
    n: int,
    m: int,
    backend: str,
    base_url: str | None,
    model: str,
    summary_model: str | None,
    api_key_env: str,
    transcript: Path | None,
    config_path: Path | None,
) -> None:
    """Serve the REST/WebSocket gateway (and the web UI if built)."""
    import uvicorn

    file_cfg = _load_config_file(config_path)
    host = _merged(ctx, file_cfg, "host", host)
    port = _merged(ctx, file_cfg, "port", port)
    n = _merged(ctx, file_cfg, "n", n)
    m = _merged(ctx, file_cfg, "m", m)
    backend = _merged(ctx, file_cfg, "backend", backend)
    base_url = _merged(ctx, file_cfg, "base_url", base_url)
    model = _merged(ctx, file_cfg, "model", model)
    summary_model = _merged(ctx, file_cfg, "summary_model", summary_model)

    backend_cfg = None
    if backend == "http":
        if not base_url:
            raise click.UsageError("--base-url is required with --backend http")
        backend_cfg = BackendConfig(base_url=base_url, api_key_env=api_key_env, model_id=model)
    if static_dir is None:
        default_static = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        if default_static.is_dir():
            static_dir = default_static
    gateway_cfg = GatewayConfig(
        host=host,
        port=port,
        backend_kind=backend,
        backend=backend_cfg,
        session=_session_config(n, m, model, downscale, summary_model),
        transcript_dir=transcript_dir,
        cors_allow_origins=tuple(cors_origins),
        static_dir=static_dir,
    )
    try:
        gateway_cfg.validate()
    except GatewayConfigError as exc:
        raise click.ClickException(str(exc)) from exc
    uvicorn.run(create_app(gateway_cfg), host=host, port=port)


if __name__ == "__main__":
    main()
