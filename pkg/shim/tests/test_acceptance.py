"""Acceptance gate: the full kernel-integration guarantee, end to end.

Everything runs against a real InteractiveShell and stand-in wheels
resolved from a local find-links directory; the core is reached only
through its CLI, exactly as in production.
"""

import sys
import time


def test_secondary_shim_integration(shell, activate_hermetic):
    start = time.perf_counter()

    # activation injects exactly `smuggle` and registers the transformer
    names_before = set(shell.user_ns)
    shim = activate_hermetic()
    assert set(shell.user_ns) - names_before == {"smuggle"}
    assert shim.transform_lines in shell.input_transformers_post

    # a pinned smuggle of a stand-in wheel imports exactly that version
    path_before = sys.path[:]
    result = shell.run_cell("smuggle fakepkg  # pip: fakepkg==1.24.3",
                            store_history=True)
    assert result.error_before_exec is None
    assert result.error_in_exec is None
    assert shell.user_ns["fakepkg"].__version__ == "1.24.3"

    # the module search path is back to its pre-call value
    assert sys.path == path_before

    # the smuggled package is usable by ordinary cells
    result = shell.run_cell("total = fakepkg.answer * 2", store_history=True)
    assert result.error_in_exec is None
    assert shell.user_ns["total"] == 84

    # re-smuggling a different pin ends with the new version active
    result = shell.run_cell("smuggle fakepkg  # pip: fakepkg==1.25.0",
                            store_history=True)
    assert result.error_before_exec is None
    assert result.error_in_exec is None
    assert shell.user_ns["fakepkg"].__version__ == "1.25.0"
    assert sys.modules["fakepkg"].__version__ == "1.25.0"
    assert sys.path == path_before

    # deactivation removes the transformer; smuggle lines stop compiling
    shim.deactivate()
    assert shim.transform_lines not in shell.input_transformers_post
    assert "smuggle" not in shell.user_ns
    result = shell.run_cell("smuggle fakepkg")
    assert isinstance(result.error_before_exec, SyntaxError)

    elapsed = time.perf_counter() - start
    print(f"[SECONDARY] kernel shim integration: PASS ({elapsed:.2f}s)")
