"""Command-line interface mirroring the HTTP API.

Exit codes: 0 success, 2 input error (bad document, bad config, unknown
names), 3 pipeline failure (run finished in phase=failed).
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .datastore import DataCard
from .errors import IntentFlowError
from .models import ModelCard
from .service import Config, OrchestratorService
from .taskgraph import serialize_graph

EXIT_INPUT_ERROR = 2
EXIT_PIPELINE_FAILURE = 3


def _fail_input(exc: IntentFlowError) -> None:
    click.echo(json.dumps(exc.to_dict()), err=True)
    sys.exit(EXIT_INPUT_ERROR)


def _load_service(ctx: click.Context) -> OrchestratorService:
    try:
        config = Config.load(ctx.obj.get("config_path"))
        return OrchestratorService(config)
    except IntentFlowError as exc:
        _fail_input(exc)
    except (OSError, json.JSONDecodeError) as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_INPUT_ERROR)


@click.group()
@click.option("--config", "-c", "config_path", type=click.Path(path_type=Path),
              envvar="SAI_CONFIG", help="Path to the JSON config file.")
@click.pass_context
def main(ctx: click.Context, config_path: Path | None):
    """Intent-driven task orchestration."""
    ctx.ensure_object(dict)
    ctx.obj["config_path"] = config_path


@main.command()
@click.option("--intent", "intent_file", type=click.Path(path_type=Path),
              help="JSON intent document to plan.")
@click.option("--utterance", help="Natural-language request to plan.")
@click.option("--session", "session_id", help="Existing session id.")
@click.pass_context
def plan(ctx, intent_file: Path | None, utterance: str | None,
         session_id: str | None):
    """Produce and print the task graph without executing it."""
    if bool(intent_file) == bool(utterance):
        click.echo("exactly one of --intent / --utterance is required", err=True)
        sys.exit(EXIT_INPUT_ERROR)
    service = _load_service(ctx)
    try:
        if intent_file is not None:
            from .gateway import parse_intent
            intent = parse_intent(intent_file.read_text(encoding="utf-8"))
            graph = service.planner.plan(intent)
        else:
            session = (service.gateway.get_session(session_id) if session_id
                       else service.gateway.get_session(
                           service.gateway.open_session()))
            graph = service.planner.plan(
                utterance, chat_log=tuple(session.chat_log),
                session_id=session.session_id)
        click.echo(serialize_graph(graph))
    except IntentFlowError as exc:
        _fail_input(exc)
    finally:
        service.close()


@main.command()
@click.option("--intent", "intent_file", type=click.Path(path_type=Path))
@click.option("--utterance", help="Natural-language request to run.")
@click.option("--session", "session_id", help="Existing session id.")
@click.option("--timeout", default=60.0, show_default=True)
@click.pass_context
def run(ctx, intent_file: Path | None, utterance: str | None,
        session_id: str | None, timeout: float):
    """Execute the full pipeline in-process and print the final report."""
    if bool(intent_file) == bool(utterance):
        click.echo("exactly one of --intent / --utterance is required", err=True)
        sys.exit(EXIT_INPUT_ERROR)
    service = _load_service(ctx)
    try:
        if intent_file is not None:
            run_id = service.submit_intent(
                intent_file.read_text(encoding="utf-8"))
        else:
            if session_id is None:
                session_id = service.gateway.open_session()
                click.echo(f"session: {session_id}", err=True)
            run_id = service.submit_utterance(session_id, utterance)
    except IntentFlowError as exc:
        service.close()
        _fail_input(exc)
    state = service.wait(run_id, timeout=timeout)
    payload = {
        "run_id": state.run_id,
        "phase": state.phase,
        "scores": state.scores.to_document() if state.scores else None,
        "final_report": state.final_report_doc,
        "error": state.error,
    }
    click.echo(json.dumps(payload, indent=2))
    if state.summary:
        click.echo(state.summary, err=True)
    service.close()
    if state.phase != "done":
        sys.exit(EXIT_PIPELINE_FAILURE)


@main.group()
def models():
    """Model-card registry commands."""


@models.command("add")
@click.argument("card_files", nargs=-1, required=True,
                type=click.Path(path_type=Path, exists=True))
@click.pass_context
def models_add(ctx, card_files):
    """Validate card files and install them into the registry directory."""
    service = _load_service(ctx)
    try:
        for card_file in card_files:
            raw = json.loads(card_file.read_text(encoding="utf-8"))
            card = ModelCard.from_document(raw)
            service.register_model(card)
            target = service.config.model_cards_dir / f"{card.model_name}.json"
            target.write_text(json.dumps(card.to_document(), indent=2),
                              encoding="utf-8")
            click.echo(card.model_name)
    except (IntentFlowError,) as exc:
        _fail_input(exc)
    except json.JSONDecodeError as exc:
        click.echo(f"card file is not JSON: {exc}", err=True)
        sys.exit(EXIT_INPUT_ERROR)
    finally:
        service.close()


@models.command("list")
@click.option("--task-type", default=None)
@click.pass_context
def models_list(ctx, task_type):
    service = _load_service(ctx)
    for card in service.registry.list_models(task_type=task_type):
        click.echo(json.dumps(card.to_document()))
    service.close()


@main.group()
def data():
    """Data-card store commands."""


@data.command("add")
@click.argument("data_name")
@click.option("--modality", required=True)
@click.option("--attr", "attrs", multiple=True,
              help="Extra attribute as key=value; repeatable.")
@click.option("--payload-file", type=click.Path(path_type=Path, exists=True))
@click.option("--payload-text", default=None)
@click.pass_context
def data_add(ctx, data_name, modality, attrs, payload_file, payload_text):
    service = _load_service(ctx)
    attributes = {"modality": modality}
    for item in attrs:
        if "=" not in item:
            click.echo(f"--attr needs key=value, got {item!r}", err=True)
            sys.exit(EXIT_INPUT_ERROR)
        key, value = item.split("=", 1)
        attributes[key] = value
    if payload_file is not None:
        payload = payload_file.read_bytes()
    else:
        payload = (payload_text or "").encode("utf-8")
    try:
        service.register_data(DataCard.make(data_name, attributes), payload)
        click.echo(data_name)
    except IntentFlowError as exc:
        _fail_input(exc)
    finally:
        service.close()


@data.command("list")
@click.pass_context
def data_list(ctx):
    service = _load_service(ctx)
    for card in service.store.list_cards():
        click.echo(json.dumps(card.to_document()))
    service.close()


@main.group()
def sessions():
    """Chat-session commands."""


@sessions.command("open")
@click.pass_context
def sessions_open(ctx):
    service = _load_service(ctx)
    click.echo(service.gateway.open_session())
    service.close()


@sessions.command("list")
@click.pass_context
def sessions_list(ctx):
    service = _load_service(ctx)
    for session in service.gateway.list_sessions():
        click.echo(json.dumps({
            "session_id": session.session_id,
            "turns": len(session.chat_log),
            "last_run_id": session.last_run_id,
        }))
    service.close()


@sessions.command("show")
@click.argument("session_id")
@click.pass_context
def sessions_show(ctx, session_id):
    service = _load_service(ctx)
    try:
        session = service.gateway.get_session(session_id)
    except IntentFlowError as exc:
        _fail_input(exc)
    finally:
        service.close()
    for entry in session.chat_log:
        click.echo(json.dumps({
            "role": entry.role, "text": entry.text,
            "timestamp": entry.timestamp,
        }))


@main.command()
@click.option("--host", default=None, help="Bind address (overrides config).")
@click.option("--port", default=None, type=int)
@click.option("--ui-dir", type=click.Path(path_type=Path), default=None,
              help="Static console bundle to mount at /ui.")
@click.pass_context
def serve(ctx, host, port, ui_dir):
    """Run the HTTP service."""
    import uvicorn

    from .api import create_app

    service = _load_service(ctx)
    listen_host, _, listen_port = service.config.listen_addr.partition(":")
    app = create_app(service, ui_dir=ui_dir)
    uvicorn.run(app, host=host or listen_host or "127.0.0.1",
                port=port or int(listen_port or 8350))


if __name__ == "__main__":
    main()
