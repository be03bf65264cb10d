"""Tests for the planning and execution engine.

Planning tests run against hand-built catalogs and never touch pip; the
execution tests at the bottom drive real pip installs from a local wheel
directory, or substitute stub pip scripts where the scenario needs one.
"""

import dataclasses
import os
import random

import pytest

import davos.engine as engine
from davos import grammar, installer, metadata
from davos.engine import Action, SessionState
from davos.errors import InstallFailed, PostInstallMismatch
from davos.projects import FALLBACK_NAME

from helpers import build_dist_tree, tree_digest


def stmt(line: str) -> grammar.SmuggleStatement:
    parsed = grammar.parse_line(line)
    assert parsed is not None, f"not a smuggle statement: {line!r}"
    return parsed


def catalog_for(config) -> metadata.Catalog:
    return metadata.scan(engine.build_scope(config))


VCS_URL = "git+https://example.com/org/fakepkg.git"
VCS_LINE = f"smuggle fakepkg # pip: {VCS_URL}@abc1234"


class TestSessionState:
    def test_loaded_version_hit_and_miss(self):
        session = SessionState(loaded=(("fakepkg", "1.24.3"), ("bare", None)))
        assert session.loaded_version("fakepkg") == (True, "1.24.3")
        assert session.loaded_version("bare") == (True, None)
        assert session.loaded_version("absent") == (False, None)

    def test_round_trip(self):
        session = SessionState(
            loaded=(("fakepkg", "1.24.3"), ("bare", None)),
            smuggled=(("fakepkg", "fakepkg==1.24.3"), ("bare", None)),
        )
        assert SessionState.from_dict(session.to_dict()) == session

    def test_from_dict_tolerates_missing_keys(self):
        assert SessionState.from_dict({}) == SessionState()
        assert SessionState.from_dict({"loaded": None, "smuggled": None}) == (
            SessionState()
        )


class TestPlanDecisions:
    def test_present_unconstrained_loads(self, tmp_path, hermetic_config):
        site = str(tmp_path / "site")
        build_dist_tree(site, "fakepkg", "1.24.3")
        config = hermetic_config(site_dirs=(site,))
        plan = engine.plan(stmt("smuggle fakepkg"), catalog_for(config),
                           SessionState(), config)
        assert plan.action is Action.LOAD
        assert plan.dist is not None and plan.dist.raw_version == "1.24.3"
        assert plan.command is None
        assert plan.search_path_prepend == config.project.dir
        assert plan.reload_needed is False
        assert plan.warnings == ()

    def test_satisfied_constraint_loads(self, tmp_path, hermetic_config):
        site = str(tmp_path / "site")
        build_dist_tree(site, "fakepkg", "1.24.3")
        config = hermetic_config(site_dirs=(site,))
        plan = engine.plan(stmt("smuggle fakepkg # pip: fakepkg==1.24.3"),
                           catalog_for(config), SessionState(), config)
        assert plan.action is Action.LOAD
        assert plan.command is None

    def test_unsatisfied_constraint_installs(self, tmp_path, hermetic_config):
        site = str(tmp_path / "site")
        build_dist_tree(site, "fakepkg", "1.25.0")
        config = hermetic_config(site_dirs=(site,))
        plan = engine.plan(stmt("smuggle fakepkg # pip: fakepkg==1.24.3"),
                           catalog_for(config), SessionState(), config)
        assert plan.action is Action.INSTALL_THEN_LOAD
        argv = plan.command.argv
        assert argv[0] == "install"
        assert "fakepkg==1.24.3" in argv
        target = argv[argv.index("--target") + 1]
        assert target == config.project.dir
        assert "--upgrade" in argv
        assert "--no-index" in argv  # pip_extra_args pass through
        assert plan.command.target_dir == config.project.dir
        assert plan.search_path_prepend == config.project.dir
        assert plan.dist is None

    def test_missing_package_installs(self, hermetic_config):
        config = hermetic_config()
        plan = engine.plan(stmt("smuggle fakepkg"), catalog_for(config),
                           SessionState(), config)
        assert plan.action is Action.INSTALL_THEN_LOAD
        assert "fakepkg" in plan.command.argv

    def test_stdlib_module_loads_without_dist(self, hermetic_config):
        config = hermetic_config()
        plan = engine.plan(stmt("smuggle json"), catalog_for(config),
                           SessionState(), config)
        assert plan.action is Action.LOAD
        assert plan.dist is None
        assert plan.command is None

    def test_metadata_free_tree_loads(self, tmp_path, hermetic_config):
        site = str(tmp_path / "site")
        os.makedirs(os.path.join(site, "loosepkg"))
        with open(os.path.join(site, "loosepkg", "__init__.py"), "w") as fh:
            fh.write("x = 1\n")
        config = hermetic_config(site_dirs=(site,))
        plan = engine.plan(stmt("smuggle loosepkg"), catalog_for(config),
                           SessionState(), config)
        assert plan.action is Action.LOAD
        assert plan.dist is None

    def test_metadata_free_tree_with_constraint_installs(
        self, tmp_path, hermetic_config
    ):
        site = str(tmp_path / "site")
        os.makedirs(os.path.join(site, "loosepkg"))
        with open(os.path.join(site, "loosepkg", "__init__.py"), "w") as fh:
            fh.write("x = 1\n")
        config = hermetic_config(site_dirs=(site,))
        plan = engine.plan(stmt("smuggle loosepkg # pip: loosepkg==1.0"),
                           catalog_for(config), SessionState(), config)
        # a version requirement needs metadata to check against; none exists
        assert plan.action is Action.INSTALL_THEN_LOAD

    def test_force_flag_skips_satisfaction_check(self, tmp_path,
                                                 hermetic_config):
        site = str(tmp_path / "site")
        build_dist_tree(site, "fakepkg", "1.24.3")
        config = hermetic_config(site_dirs=(site,))
        plan = engine.plan(
            stmt("smuggle fakepkg # pip: --force-reinstall fakepkg==1.24.3"),
            catalog_for(config), SessionState(), config)
        assert plan.action is Action.INSTALL_THEN_LOAD
        assert "--force-reinstall" in plan.command.argv

    def test_unparseable_version_fails_constraints(self, tmp_path,
                                                   hermetic_config):
        site = str(tmp_path / "site")
        build_dist_tree(site, "fakepkg", "1.0-local!wat")
        config = hermetic_config(site_dirs=(site,))
        plan = engine.plan(stmt("smuggle fakepkg # pip: fakepkg==1.0"),
                           catalog_for(config), SessionState(), config)
        assert plan.action is Action.INSTALL_THEN_LOAD

    def test_unparseable_version_still_loads_unconstrained(
        self, tmp_path, hermetic_config
    ):
        site = str(tmp_path / "site")
        build_dist_tree(site, "fakepkg", "1.0-local!wat")
        config = hermetic_config(site_dirs=(site,))
        plan = engine.plan(stmt("smuggle fakepkg"), catalog_for(config),
                           SessionState(), config)
        assert plan.action is Action.LOAD
        assert plan.dist.version is None
        assert plan.dist.raw_version == "1.0-local!wat"

    def test_import_name_resolves_to_dist_name(self, tmp_path,
                                               hermetic_config):
        site = str(tmp_path / "site")
        build_dist_tree(site, "umap-learn", "0.5.9",
                        modules={"umap/__init__.py": "x = 1\n"},
                        top_level="umap")
        config = hermetic_config(site_dirs=(site,))
        plan = engine.plan(stmt("smuggle umap"), catalog_for(config),
                           SessionState(), config)
        assert plan.action is Action.LOAD
        assert plan.dist.dist_name == "umap-learn"

    def test_from_form_load_target(self, tmp_path, hermetic_config):
        site = str(tmp_path / "site")
        build_dist_tree(site, "fakepkg", "1.24.3")
        config = hermetic_config(site_dirs=(site,))
        plan = engine.plan(stmt("from fakepkg.sub smuggle thing as t"),
                           catalog_for(config), SessionState(), config)
        assert plan.action is Action.LOAD
        assert plan.load_target.module == "fakepkg.sub"
        assert plan.load_target.attrs == (("thing", "t"),)
        assert plan.load_target.alias is None
        assert plan.requirement.dist_name == "fakepkg"

    def test_refused_location_flag_with_project(self, tmp_path,
                                                hermetic_config):
        config = hermetic_config()
        plan = engine.plan(
            stmt(f"smuggle fakepkg # pip: --target {tmp_path} fakepkg"),
            catalog_for(config), SessionState(), config)
        assert plan.action is Action.REFUSED
        assert plan.reason.startswith("LocationFlagWithProject:")
        assert "--target" in plan.reason
        assert plan.command is None
        assert plan.to_dict()["action"] == "REFUSED"

    def test_refused_unknown_installer(self, hermetic_config):
        config = hermetic_config()
        good = stmt("smuggle fakepkg # pip: fakepkg")
        bad = dataclasses.replace(
            good, onion=dataclasses.replace(good.onion, installer="conda"))
        plan = engine.plan(bad, catalog_for(config), SessionState(), config)
        assert plan.action is Action.REFUSED
        assert plan.reason.startswith("UnknownInstaller:")

    def test_target_without_project_prepends_target(self, tmp_path,
                                                    hermetic_config):
        vendor = str(tmp_path / "vendor")
        config = hermetic_config(project=None)
        s = stmt(f"smuggle fakepkg # pip: --target {vendor} fakepkg==1.24.3")
        plan = engine.plan(s, catalog_for(config), SessionState(), config)
        assert plan.action is Action.INSTALL_THEN_LOAD
        assert plan.search_path_prepend == vendor
        argv = plan.command.argv
        assert argv[argv.index("--target") + 1] == vendor
        assert argv.count("--target") == 1

    def test_target_without_project_sees_installed_copy(self, tmp_path,
                                                        hermetic_config):
        vendor = str(tmp_path / "vendor")
        build_dist_tree(vendor, "fakepkg", "1.24.3")
        config = hermetic_config(project=None)
        s = stmt(f"smuggle fakepkg # pip: --target {vendor} fakepkg==1.24.3")
        catalog = metadata.scan(engine.statement_scope(s, config))
        plan = engine.plan(s, catalog, SessionState(), config)
        assert plan.action is Action.LOAD
        assert plan.dist.location == vendor
        assert plan.search_path_prepend == vendor

    def test_statement_scope_unchanged_when_project_enabled(self, tmp_path,
                                                            hermetic_config):
        config = hermetic_config()
        s = stmt(f"smuggle fakepkg # pip: --target {tmp_path} fakepkg")
        assert (engine.statement_scope(s, config).directories
                == engine.build_scope(config).directories)

    def test_scope_orders_project_dir_first(self, tmp_path, hermetic_config):
        site = str(tmp_path / "site")
        os.makedirs(site)
        config = hermetic_config(site_dirs=(site,))
        dirs = engine.build_scope(config).directories
        assert dirs == (config.project.dir, site)

    def test_plan_never_creates_the_project_dir(self, hermetic_config):
        config = hermetic_config()
        plan = engine.plan(stmt("smuggle fakepkg"), catalog_for(config),
                           SessionState(), config)
        assert plan.action is Action.INSTALL_THEN_LOAD
        assert not os.path.isdir(config.project.dir)

    def test_fallback_project_install_carries_warning(self, hermetic_config):
        config = hermetic_config(project=FALLBACK_NAME)
        plan = engine.plan(stmt("smuggle fakepkg"), catalog_for(config),
                           SessionState(), config)
        assert plan.action is Action.INSTALL_THEN_LOAD
        assert any("fallback" in w for w in plan.warnings)

    def test_fallback_project_load_has_no_warning(self, tmp_path,
                                                  hermetic_config):
        site = str(tmp_path / "site")
        build_dist_tree(site, "fakepkg", "1.24.3")
        config = hermetic_config(project=FALLBACK_NAME, site_dirs=(site,))
        plan = engine.plan(stmt("smuggle fakepkg"), catalog_for(config),
                           SessionState(), config)
        assert plan.action is Action.LOAD
        assert plan.warnings == ()


class TestReloadFlag:
    def _plan(self, tmp_path, hermetic_config, session, line="smuggle fakepkg",
              version="1.24.3"):
        site = str(tmp_path / "site")
        build_dist_tree(site, "fakepkg", version)
        config = hermetic_config(site_dirs=(site,))
        return engine.plan(stmt(line), catalog_for(config), session, config)

    def test_not_loaded_never_reloads(self, tmp_path, hermetic_config):
        plan = self._plan(tmp_path, hermetic_config, SessionState())
        assert plan.reload_needed is False

    def test_same_version_does_not_reload(self, tmp_path, hermetic_config):
        session = SessionState(loaded=(("fakepkg", "1.24.3"),))
        plan = self._plan(tmp_path, hermetic_config, session)
        assert plan.action is Action.LOAD
        assert plan.reload_needed is False

    def test_version_change_reloads(self, tmp_path, hermetic_config):
        session = SessionState(loaded=(("fakepkg", "1.0.0"),))
        plan = self._plan(tmp_path, hermetic_config, session)
        assert plan.action is Action.LOAD
        assert plan.reload_needed is True

    def test_unknown_loaded_version_reloads(self, tmp_path, hermetic_config):
        session = SessionState(loaded=(("fakepkg", None),))
        plan = self._plan(tmp_path, hermetic_config, session)
        assert plan.reload_needed is True

    def test_install_over_loaded_module_reloads(self, tmp_path,
                                                hermetic_config):
        session = SessionState(loaded=(("fakepkg", "1.24.3"),))
        plan = self._plan(tmp_path, hermetic_config, session,
                          line="smuggle fakepkg # pip: fakepkg==1.25.0")
        assert plan.action is Action.INSTALL_THEN_LOAD
        assert plan.reload_needed is True


class TestReceipts:
    def test_read_missing_file(self, tmp_path):
        assert engine.read_receipts(str(tmp_path)) == {}

    def test_write_then_read(self, tmp_path):
        engine.write_receipt(str(tmp_path), "fakepkg", "abc1234")
        engine.write_receipt(str(tmp_path), "otherpkg", "def5678")
        assert engine.read_receipts(str(tmp_path)) == {
            "fakepkg": "abc1234", "otherpkg": "def5678",
        }

    def test_rewrite_updates_in_place(self, tmp_path):
        engine.write_receipt(str(tmp_path), "fakepkg", "abc1234")
        engine.write_receipt(str(tmp_path), "fakepkg", "fff0000")
        assert engine.read_receipts(str(tmp_path)) == {"fakepkg": "fff0000"}

    def test_malformed_lines_are_skipped(self, tmp_path):
        path = tmp_path / engine.RECEIPTS_FILENAME
        path.write_text("fakepkg\tabc1234\nno-tab-here\n\tref-only\n\n")
        assert engine.read_receipts(str(tmp_path)) == {"fakepkg": "abc1234"}


class TestVcsPlanning:
    """A pinned-ref VCS requirement counts as satisfied only when this
    engine installed that exact ref into the active project."""

    def _setup(self, hermetic_config, with_copy=True, receipt="abc1234"):
        config = hermetic_config()
        project_dir = config.project.dir
        if with_copy:
            build_dist_tree(project_dir, "fakepkg", "0.0.1+gabc1234")
        if receipt is not None:
            os.makedirs(project_dir, exist_ok=True)
            engine.write_receipt(project_dir, "fakepkg", receipt)
        return config

    def test_matching_receipt_and_copy_loads(self, hermetic_config):
        config = self._setup(hermetic_config)
        plan = engine.plan(stmt(VCS_LINE), catalog_for(config),
                           SessionState(), config)
        assert plan.action is Action.LOAD
        assert plan.dist.location == config.project.dir

    def test_no_receipt_installs(self, hermetic_config):
        config = self._setup(hermetic_config, receipt=None)
        plan = engine.plan(stmt(VCS_LINE), catalog_for(config),
                           SessionState(), config)
        assert plan.action is Action.INSTALL_THEN_LOAD
        assert f"{VCS_URL}@abc1234" in plan.command.argv

    def test_stale_receipt_installs(self, hermetic_config):
        config = self._setup(hermetic_config, receipt="0ldc0mmit")
        plan = engine.plan(stmt(VCS_LINE), catalog_for(config),
                           SessionState(), config)
        assert plan.action is Action.INSTALL_THEN_LOAD

    def test_copy_outside_project_installs(self, tmp_path, hermetic_config):
        site = str(tmp_path / "site")
        build_dist_tree(site, "fakepkg", "0.0.1+gabc1234")
        config = hermetic_config(site_dirs=(site,))
        os.makedirs(config.project.dir, exist_ok=True)
        engine.write_receipt(config.project.dir, "fakepkg", "abc1234")
        plan = engine.plan(stmt(VCS_LINE), catalog_for(config),
                           SessionState(), config)
        assert plan.action is Action.INSTALL_THEN_LOAD

    def test_refless_url_always_installs(self, hermetic_config):
        config = self._setup(hermetic_config)
        line = f"smuggle fakepkg # pip: {VCS_URL}"
        plan = engine.plan(stmt(line), catalog_for(config),
                           SessionState(), config)
        assert plan.action is Action.INSTALL_THEN_LOAD

    def test_without_project_always_installs(self, tmp_path, hermetic_config):
        site = str(tmp_path / "site")
        build_dist_tree(site, "fakepkg", "0.0.1+gabc1234")
        config = hermetic_config(project=None, site_dirs=(site,))
        plan = engine.plan(stmt(VCS_LINE), catalog_for(config),
                           SessionState(), config)
        assert plan.action is Action.INSTALL_THEN_LOAD

    def test_force_overrides_receipt(self, hermetic_config):
        config = self._setup(hermetic_config)
        line = f"smuggle fakepkg # pip: --upgrade {VCS_URL}@abc1234"
        plan = engine.plan(stmt(line), catalog_for(config),
                           SessionState(), config)
        assert plan.action is Action.INSTALL_THEN_LOAD


class TestRecord:
    def test_first_insert_order(self):
        session = SessionState()
        session = engine.record(stmt("smuggle alpha"), session)
        session = engine.record(stmt("smuggle beta # pip: beta==1.0"), session)
        assert session.smuggled == (("alpha", None), ("beta", "beta==1.0"))

    def test_repeat_updates_args_keeps_position(self):
        session = SessionState()
        session = engine.record(stmt("smuggle alpha # pip: alpha==1.0"), session)
        session = engine.record(stmt("smuggle beta"), session)
        session = engine.record(stmt("smuggle alpha # pip: alpha==2.0"), session)
        assert session.smuggled == (("alpha", "alpha==2.0"), ("beta", None))

    def test_onion_dist_name_wins_over_module(self):
        session = engine.record(
            stmt("smuggle umap # pip: umap-learn==0.5.9"), SessionState())
        assert session.smuggled == (("umap-learn", "umap-learn==0.5.9"),)

    def test_matches_reference_model_under_random_ops(self):
        rng = random.Random(7)
        names = ["aa", "bb", "cc", "dd", "ee"]
        session = SessionState()
        order: list[str] = []
        latest: dict[str, str | None] = {}
        for _ in range(200):
            name = rng.choice(names)
            if rng.random() < 0.3:
                line, args = f"smuggle {name}", None
            else:
                version = f"{rng.randrange(9)}.{rng.randrange(9)}"
                args = f"{name}=={version}"
                line = f"smuggle {name} # pip: {args}"
            session = engine.record(stmt(line), session)
            if name not in latest:
                order.append(name)
            latest[name] = args
            assert session.smuggled == tuple((n, latest[n]) for n in order)


def write_stub(path, body: str) -> str:
    path.write_text("#!/usr/bin/env python3\n" + body)
    path.chmod(0o755)
    return str(path)


NOOP_STUB = "import sys\nsys.exit(0)\n"

# lays down a plausible installed tree at --target, like a VCS build would
VCS_STUB = """\
import os
import sys

args = sys.argv[1:]
target = args[args.index("--target") + 1]
with open({log!r}, "a") as fh:
    fh.write(" ".join(args) + "\\n")
pkg = os.path.join(target, "fakepkg")
info = os.path.join(target, "fakepkg-0.0.1+gabc1234.dist-info")
os.makedirs(pkg, exist_ok=True)
os.makedirs(info, exist_ok=True)
with open(os.path.join(pkg, "__init__.py"), "w") as fh:
    fh.write("__version__ = '0.0.1+gabc1234'\\n")
with open(os.path.join(info, "METADATA"), "w") as fh:
    fh.write("Metadata-Version: 2.1\\nName: fakepkg\\nVersion: 0.0.1+gabc1234\\n")
with open(os.path.join(info, "RECORD"), "w") as fh:
    fh.write("fakepkg/__init__.py,,\\n"
             "fakepkg-0.0.1+gabc1234.dist-info/METADATA,,\\n"
             "fakepkg-0.0.1+gabc1234.dist-info/RECORD,,\\n")
"""


class TestRunWithPip:
    def test_install_rerun_upgrade_cycle(self, tmp_path, hermetic_config):
        site = str(tmp_path / "site")
        build_dist_tree(site, "fakepkg", "1.25.0")
        config = hermetic_config(site_dirs=(site,))
        project_dir = config.project.dir
        site_before = tree_digest(site)

        # env has the wrong version: install the pinned one into the project
        first = engine.run(stmt("smuggle fakepkg # pip: fakepkg==1.24.3"),
                           SessionState(), config)
        assert first.plan.action is Action.INSTALL_THEN_LOAD
        assert first.result.status is installer.InstallStatus.OK
        assert first.dist.raw_version == "1.24.3"
        assert first.dist.location == project_dir
        assert first.session.smuggled == (("fakepkg", "fakepkg==1.24.3"),)
        assert tree_digest(site) == site_before
        assert SessionState.from_dict(
            first.to_dict()["state"]) == first.session

        # rerun: the project copy satisfies, nothing is installed
        project_before = tree_digest(project_dir)
        second = engine.run(stmt("smuggle fakepkg # pip: fakepkg==1.24.3"),
                            first.session, config)
        assert second.plan.action is Action.LOAD
        assert second.result is None
        assert tree_digest(project_dir) == project_before

        # new pin: the stale project copy is removed, not piled onto
        third = engine.run(stmt("smuggle fakepkg # pip: fakepkg==1.25.0"),
                           second.session, config)
        assert third.plan.action is Action.INSTALL_THEN_LOAD
        assert third.dist.raw_version == "1.25.0"
        infos = sorted(e for e in os.listdir(project_dir)
                       if e.endswith(".dist-info"))
        assert infos == ["fakepkg-1.25.0.dist-info"]
        with open(os.path.join(project_dir, "fakepkg", "__init__.py")) as fh:
            assert "1.25.0" in fh.read()
        assert third.session.smuggled == (("fakepkg", "fakepkg==1.25.0"),)
        assert tree_digest(site) == site_before

    def test_load_path_records_without_installing(self, tmp_path,
                                                  hermetic_config):
        site = str(tmp_path / "site")
        build_dist_tree(site, "fakepkg", "1.24.3")
        config = hermetic_config(site_dirs=(site,))
        outcome = engine.run(stmt("smuggle fakepkg"), SessionState(), config)
        assert outcome.plan.action is Action.LOAD
        assert outcome.ok
        assert outcome.result is None
        assert outcome.dist.raw_version == "1.24.3"
        assert outcome.session.smuggled == (("fakepkg", None),)
        assert not os.path.isdir(config.project.dir)

    def test_declined_install_changes_nothing(self, tmp_path,
                                              hermetic_config):
        config = hermetic_config(noninteractive=False, confirm_install=True)
        outcome = engine.run(stmt("smuggle fakepkg # pip: fakepkg==1.24.3"),
                             SessionState(), config, ask=lambda _p: "n")
        assert outcome.result.status is installer.InstallStatus.DECLINED
        assert outcome.dist is None
        assert outcome.session.smuggled == ()
        scan = metadata.scan(
            metadata.SearchScope(directories=(config.project.dir,)))
        assert scan.dists == {}

    def test_accepted_prompt_installs(self, hermetic_config):
        config = hermetic_config(noninteractive=False, confirm_install=True)
        prompts: list[str] = []

        def ask(prompt: str) -> str:
            prompts.append(prompt)
            return "y"

        outcome = engine.run(stmt("smuggle fakepkg # pip: fakepkg==1.24.3"),
                             SessionState(), config, ask=ask)
        assert outcome.result.status is installer.InstallStatus.OK
        assert len(prompts) == 1 and "fakepkg" in prompts[0]

    def test_refused_plan_skips_execution(self, tmp_path, hermetic_config):
        config = hermetic_config()
        outcome = engine.run(
            stmt(f"smuggle fakepkg # pip: --target {tmp_path} fakepkg"),
            SessionState(), config)
        assert outcome.plan.action is Action.REFUSED
        assert not outcome.ok
        assert outcome.result is None
        assert outcome.dist is None
        assert outcome.session.smuggled == ()

    def test_failed_install_raises_and_leaves_env_alone(self, tmp_path,
                                                        hermetic_config):
        site = str(tmp_path / "site")
        build_dist_tree(site, "fakepkg", "1.24.3")
        config = hermetic_config(site_dirs=(site,))
        before = tree_digest(site)
        with pytest.raises(InstallFailed):
            engine.run(stmt("smuggle fakepkg # pip: fakepkg==9.9.9"),
                       SessionState(), config)
        assert tree_digest(site) == before

    def test_quiet_success_without_files_is_a_mismatch(self, tmp_path,
                                                       hermetic_config):
        stub = write_stub(tmp_path / "noop-pip", NOOP_STUB)
        config = hermetic_config(pip_executable=stub)
        with pytest.raises(PostInstallMismatch, match="rescan found nothing"):
            engine.run(stmt("smuggle fakepkg # pip: fakepkg==1.24.3"),
                       SessionState(), config)

    def test_vcs_install_writes_receipt_then_reruns_load(self, tmp_path,
                                                         hermetic_config):
        log = str(tmp_path / "stub.log")
        stub = write_stub(tmp_path / "vcs-pip", VCS_STUB.format(log=log))
        config = hermetic_config(pip_executable=stub)
        first = engine.run(stmt(VCS_LINE), SessionState(), config)
        assert first.result.status is installer.InstallStatus.OK
        assert first.dist.dist_name == "fakepkg"
        assert engine.read_receipts(config.project.dir) == {
            "fakepkg": "abc1234"}
        second = engine.run(stmt(VCS_LINE), first.session, config)
        assert second.plan.action is Action.LOAD
        with open(log) as fh:
            assert len(fh.readlines()) == 1

    def test_vcs_quiet_noop_is_a_mismatch(self, tmp_path, hermetic_config):
        stub = write_stub(tmp_path / "noop-pip", NOOP_STUB)
        config = hermetic_config(pip_executable=stub)
        with pytest.raises(PostInstallMismatch, match="no distribution"):
            engine.run(stmt(VCS_LINE), SessionState(), config)
        assert engine.read_receipts(config.project.dir) == {}

    def test_target_without_project_installs_then_reruns_load(
        self, tmp_path, hermetic_config
    ):
        vendor = str(tmp_path / "vendor")
        config = hermetic_config(project=None)
        line = f"smuggle fakepkg # pip: --target {vendor} fakepkg==1.24.3"
        first = engine.run(stmt(line), SessionState(), config)
        assert first.result.status is installer.InstallStatus.OK
        assert first.dist.location == vendor
        assert first.plan.search_path_prepend == vendor
        second = engine.run(stmt(line), first.session, config)
        assert second.plan.action is Action.LOAD
        assert second.result is None

    def test_fallback_project_warns_at_run_time(self, hermetic_config):
        config = hermetic_config(project=FALLBACK_NAME)
        with pytest.warns(UserWarning, match="fallback"):
            outcome = engine.run(
                stmt("smuggle otherpkg # pip: otherpkg==0.3.1"),
                SessionState(), config)
        assert outcome.result.status is installer.InstallStatus.OK
