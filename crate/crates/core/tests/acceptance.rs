use qdamp::verify::{run_all, SuiteConfig};

fn main() {
    let reports = run_all(&SuiteConfig::default());
    let mut failures = Vec::new();
    for r in &reports {
        let ok = r.pass && r.within_budget();
        println!(
            "{} criterion {:>2} {:<24} {:>9.1} ms (budget {:>6.0} ms)",
            if ok { "PASS" } else { "FAIL" },
            r.id,
            r.title,
            r.runtime_ms,
            r.budget_ms
        );
        for c in &r.checks {
            println!(
                "       {} {:<48} measured {:.3e} expected {:.3e} tol {:.1e}{}",
                if c.pass { "ok  " } else { "FAIL" },
                c.name,
                c.measured,
                c.expected,
                c.tolerance,
                c.diagnostic.as_deref().map(|d| format!(" ({d})")).unwrap_or_default()
            );
        }
        if !ok {
            failures.push(r.id);
        }
    }
    let total: f64 = reports.iter().map(|r| r.runtime_ms).sum();
    println!("total {:.1} s (budget 120 s)", total / 1e3);
    if !failures.is_empty() || total > 120e3 {
        eprintln!("failed criteria: {failures:?}");
        std::process::exit(1);
    }
}
