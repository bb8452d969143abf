"""
Outage curves from the experiment runner
========================================

The CLI subcommands are thin wrappers around these functions; calling them
directly gives the rows as dataclasses instead of CSV text.
"""

from dataclasses import replace

from mecrelay.expcli import FIG3_DEFAULTS, ExperimentConfig, run_fig2, run_fig3

cfg = ExperimentConfig(trials=100_000)
print("CPU frequencies drawn for seed", cfg.seed, ":", cfg.resolve_freqs())

rows = run_fig2(cfg, out="fig2.csv")
for r in rows:
    if r.method == "monte-carlo":
        print(f"P_r = {r.sweep_value:5.1f} dB  {r.scheme_id:6s}  {r.p_out:.4g}")

# relay count sweep: one CSV per CPU population
by_pop = run_fig3(replace(cfg, **FIG3_DEFAULTS), out="fig3.csv")
for mean, rows in by_pop.items():
    lbrs = [r.p_out for r in rows if r.scheme_id == "LBRS" and r.method == "monte-carlo"]
    print(f"mean f = {mean:.0e}: LBRS outage vs N =", [f"{p:.3g}" for p in lbrs])
