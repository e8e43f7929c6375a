import sys

from src.config import config
from src.report import HTMLReportGenerator, ReportGenerator, write_json
from src.cli import combined_exit_code, verify_all
from src.scenarios import list_scenarios, load_scenario

print("=== Conditional EPI: bundled scenarios ===\n")

scenarios = [load_scenario(entry["name"]) for entry in list_scenarios()]
print(f"Scenarios: {', '.join(s.name for s in scenarios)}\n")

runs = verify_all(scenarios, parallel="--parallel" in sys.argv)

print("\n--- Writing reports ---\n")

out_dir = config.paths.ensure_output_dir()
for run in runs:
    print(f"  JSON: {write_json(run, out_dir / (run.scenario['name'] + '.json'))}")

print(f"  HTML: {HTMLReportGenerator(out_dir).generate(runs, 'suite.html')}")
print(f"  PDF: {ReportGenerator(out_dir).generate(runs, 'suite.pdf')}")

total = sum(run.wall_clock for run in runs)
failed = [run.scenario["name"] for run in runs if run.exit_code != 0]
print(f"\nTotal time: {total:.1f}s")
print("All scenarios passed" if not failed else f"Not passing: {', '.join(failed)}")

sys.exit(combined_exit_code(runs))
