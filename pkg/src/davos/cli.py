"""Command-line surface.

Every subcommand prints exactly one JSON document on stdout (all carrying
``"v": 1``); anything human-facing (pip output, prompts, warnings) goes to
stderr. Exit codes: 0 success, 1 operational error, 2 usage error.
Operational errors are reported as ``{"error": {"code", "message"}}``.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import engine, grammar, metadata, notebook_io
from .config import ConfigState
from .errors import DavosError, MalformedSmuggle, ProjectNotFound
from .projects import ProjectStore
from .versions import check_python

PROTOCOL_VERSION = 1


def _emit(doc: dict) -> None:
    doc = {"v": PROTOCOL_VERSION, **doc}
    json.dump(doc, sys.stdout, ensure_ascii=False)
    sys.stdout.write("\n")


def _emit_error(exc: DavosError) -> int:
    _emit({"error": {"code": exc.code, "message": str(exc)}})
    return 1


def _stderr_input(prompt: str = "") -> str:
    sys.stderr.write(prompt)
    sys.stderr.flush()
    return input()


def _statement_reports(per_cell) -> list[dict]:
    out = []
    for cell_index, statements in per_cell:
        for stmt in statements:
            report = stmt.to_dict()
            report["cell"] = cell_index
            out.append(report)
    return out


def _load_json_file(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _session_from(args) -> engine.SessionState:
    if getattr(args, "state", None):
        return engine.SessionState.from_dict(_load_json_file(args.state))
    return engine.SessionState()


def _config_from(args) -> ConfigState:
    if getattr(args, "config", None):
        return ConfigState.from_dict(_load_json_file(args.config))
    return ConfigState()


def _parse_statement(text: str) -> list[grammar.SmuggleStatement]:
    stmt = grammar.parse_line(text.strip("\n"))
    if stmt is None:
        raise MalformedSmuggle(f"no smuggle statement found in {text!r}")
    return grammar.iter_statements(stmt)


# -- subcommands --------------------------------------------------------------


def _cmd_parse(args) -> int:
    if args.code is not None:
        _, recorded = grammar.transform_source(args.code)
        per_cell = [(None, recorded)]
    elif args.source == "-":
        _, recorded = grammar.transform_source(sys.stdin.read())
        per_cell = [(None, recorded)]
    elif args.source is None:
        raise MalformedSmuggle("parse needs a file argument, '-', or --code")
    elif args.source.endswith(".ipynb"):
        doc = notebook_io.load(args.source)
        _, inventory = notebook_io.transform_notebook(doc)
        per_cell = list(enumerate(inventory))
    else:
        with open(args.source, encoding="utf-8") as fh:
            _, recorded = grammar.transform_source(fh.read())
        per_cell = [(None, recorded)]
    _emit({"statements": _statement_reports(per_cell)})
    return 0


def _cmd_transform(args) -> int:
    if args.code is not None:
        text, recorded = grammar.transform_source(args.code)
        _emit({
            "source": text,
            "statements": _statement_reports([(None, recorded)]),
        })
        return 0
    if args.notebook is None:
        raise MalformedSmuggle("transform needs a notebook argument or --code")
    doc = notebook_io.load(args.notebook)
    new_doc, inventory = notebook_io.transform_notebook(doc)
    statements = _statement_reports(list(enumerate(inventory)))
    if args.output:
        notebook_io.save(new_doc, args.output)
        _emit({"path": args.output, "statements": statements})
    else:
        _emit({"path": None, "notebook": new_doc.data, "statements": statements})
    return 0


def _cmd_plan(args) -> int:
    session = _session_from(args)
    config = _config_from(args)
    plans = []
    for stmt in _parse_statement(args.statement):
        catalog = metadata.scan(engine.statement_scope(stmt, config))
        plans.append(engine.plan(stmt, catalog, session, config).to_dict())
    _emit({"plans": plans})
    return 0


def _cmd_run(args) -> int:
    session = _session_from(args)
    config = _config_from(args)
    if args.yes:
        config = config.configure({"confirm_install": False})
    outcomes = []
    all_ok = True
    for stmt in _parse_statement(args.statement):
        outcome = engine.run(stmt, session, config, ask=_stderr_input)
        session = outcome.session
        outcomes.append(outcome.to_dict())
        all_ok = all_ok and outcome.ok
    _emit({"outcomes": outcomes, "state": session.to_dict()})
    return 0 if all_ok else 1


def _cmd_projects(args) -> int:
    store = ProjectStore(args.project_root)
    if args.projects_cmd == "list":
        _emit({"projects": [p.to_dict() for p in store.list_all()]})
    elif args.projects_cmd == "prune":
        report = store.prune(yes=args.yes, interactive=sys.stdin.isatty(),
                             ask=_stderr_input)
        _emit(report.to_dict())
    elif args.projects_cmd == "remove":
        store.remove(args.name)
        _emit({"removed": args.name})
    elif args.projects_cmd == "rename":
        store.rename(args.old, args.new)
        _emit({"old": args.old, "new": args.new})
    elif args.projects_cmd == "clean-empty":
        project = _existing_project(store, args.name)
        _emit({"name": args.name, "cleaned": store.clean_if_empty(project)})
    else:  # packages
        project = _existing_project(store, args.name)
        _emit({
            "name": args.name,
            "packages": [[n, v] for n, v in store.installed_packages(project)],
        })
    return 0


def _existing_project(store: ProjectStore, name: str):
    project = store.get_project(name)
    if project is None:
        raise ProjectNotFound(f"no project named {name!r}")
    return project


def _cmd_check_python(args) -> int:
    policy = "derive"
    if args.prereleases is not None:
        policy = "allow" if args.prereleases == "true" else "disallow"
    check = check_python(args.spec, current=args.current,
                         prerelease_policy=policy)
    message = check.message
    if message is None:
        message = f"Python {check.current} satisfies {check.spec_text!r}"
    _emit({
        "ok": check.ok,
        "current": str(check.current),
        "spec": check.spec_text,
        "message": message,
    })
    return 0 if check.ok else 1


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="davos",
        description="Parse, plan, and perform smuggle statements.",
    )
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("parse", help="report the smuggle inventory of a file")
    p.add_argument("source", nargs="?",
                   help="notebook (.ipynb) or python source; '-' for stdin")
    p.add_argument("--code", help="parse this code string instead of a file")
    p.set_defaults(func=_cmd_parse)

    p = sub.add_parser("transform",
                       help="rewrite smuggle statements to canonical calls")
    p.add_argument("notebook", nargs="?", help="notebook file to transform")
    p.add_argument("-o", "--output", help="write the result here")
    p.add_argument("--code", help="transform this code string instead")
    p.set_defaults(func=_cmd_transform)

    p = sub.add_parser("plan", help="decide what a statement would do")
    p.add_argument("--statement", required=True)
    p.add_argument("--state", help="session state JSON file")
    p.add_argument("--config", help="config JSON file")
    p.set_defaults(func=_cmd_plan)

    p = sub.add_parser("run", help="plan, install if needed, and verify")
    p.add_argument("--statement", required=True)
    p.add_argument("--state", help="session state JSON file")
    p.add_argument("--config", help="config JSON file")
    p.add_argument("--yes", action="store_true",
                   help="skip the install confirmation prompt")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("projects", help="manage the project store")
    p.add_argument("--project-root", default=None,
                   help="override the store root directory")
    psub = p.add_subparsers(dest="projects_cmd", required=True)
    psub.add_parser("list")
    q = psub.add_parser("prune")
    q.add_argument("--yes", action="store_true")
    q = psub.add_parser("remove")
    q.add_argument("name")
    q = psub.add_parser("rename")
    q.add_argument("old")
    q.add_argument("new")
    q = psub.add_parser("clean-empty")
    q.add_argument("name")
    q = psub.add_parser("packages")
    q.add_argument("name")
    p.set_defaults(func=_cmd_projects)

    p = sub.add_parser("check-python",
                       help="check the running interpreter against a spec")
    p.add_argument("--spec", required=True)
    p.add_argument("--current", default=None)
    p.add_argument("--prereleases", choices=("true", "false"), default=None)
    p.set_defaults(func=_cmd_check_python)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DavosError as exc:
        return _emit_error(exc)


if __name__ == "__main__":
    sys.exit(main())
