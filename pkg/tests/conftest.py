def pytest_terminal_summary(terminalreporter):
    """Repeat the acceptance PASS/FAIL lines after the run (pytest captures them otherwise)."""
    module = __import__("sys").modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number])
