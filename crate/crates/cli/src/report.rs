use std::fmt::Write;

use acdcflow::solution::{BindingLimit, Bound, LimitEvent, Solution};
use acdcflow::vsc::PinnedLimit;

fn mark(binding: bool) -> &'static str {
    if binding {
        "*"
    } else {
        " "
    }
}

fn event_text(event: &LimitEvent) -> String {
    let side = |b: &Bound| match b {
        Bound::Max => "max",
        Bound::Min => "min",
    };
    match event {
        LimitEvent::GeneratorPinned { bus, bound, q, limit } => {
            format!("gen at bus {bus}: qG {q:.4} held at q{} {limit:.4}", side(bound))
        }
        LimitEvent::GeneratorReleased { bus, bound, v, v_set } => {
            format!(
                "gen at bus {bus}: leaves q{}, V {v:.4} vs setpoint {v_set:.4}",
                side(bound)
            )
        }
        LimitEvent::ConverterPinned {
            converter,
            released,
            pinned,
            value,
            bound,
        } => {
            let what = match pinned {
                PinnedLimit::VshAtMax => "Vsh max",
                PinnedLimit::VshAtMin => "Vsh min",
                PinnedLimit::IshAtMax => "Ish max",
            };
            format!("VSC {converter}: {what} {value:.4} -> {bound:.4}, {released:?} control released")
        }
    }
}

/// Per-iteration residual norms and limit events.
pub fn iteration_log(solution: &Solution) -> String {
    let mut out = String::from("Iteration log\n  iter      |g|_inf  events\n");
    for record in &solution.iteration_log {
        let events: Vec<String> = record.events.iter().map(event_text).collect();
        let _ = writeln!(
            out,
            "  {:>4}  {:>11.4e}  {}",
            record.iteration,
            record.residual_norm,
            events.join("; ")
        );
    }
    out
}

/// Bus, converter and DC node tables. Binding limits carry a trailing `*`.
pub fn tables(solution: &Solution) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "Status: {:?} after {} iterations, |g|_inf = {:.3e}",
        solution.status, solution.iterations, solution.residual_norm
    );
    if let Some(reason) = &solution.failure {
        let _ = writeln!(out, "Reason: {reason}");
    }

    let _ = writeln!(out, "\nBuses (per-unit, radians)");
    let _ = writeln!(
        out,
        "  {:>5} {:>8} {:>9} {:>9} {:>10} {:>9} {:>9}",
        "bus", "v", "theta", "pG", "qG", "pL", "qL"
    );
    for b in &solution.buses {
        let _ = writeln!(
            out,
            "  {:>5} {:>8.4} {:>9.4} {:>9.4} {:>9.4}{} {:>9.4} {:>9.4}",
            b.id,
            b.v,
            b.theta,
            b.p_gen,
            b.q_gen,
            mark(b.q_limit.is_some()),
            b.p_load,
            b.q_load
        );
    }

    if !solution.converters.is_empty() {
        let _ = writeln!(out, "\nConverters (per-unit)");
        let _ = writeln!(
            out,
            "  {:>4} {:>5} {:>5} {:>9} {:>9} {:>9} {:>8} {:>9} {:>9}",
            "vsc", "bus", "node", "Psh", "Qsh", "Pdc", "Vm", "Vsh", "Ish"
        );
        for c in &solution.converters {
            let vsh_bound = c
                .pinned
                .iter()
                .any(|p| matches!(p, PinnedLimit::VshAtMax | PinnedLimit::VshAtMin));
            let ish_bound = c.pinned.contains(&PinnedLimit::IshAtMax);
            let _ = writeln!(
                out,
                "  {:>4} {:>5} {:>5} {:>9.4} {:>9.4} {:>9.4} {:>8.4} {:>8.4}{} {:>8.4}{}",
                c.id,
                c.ac_bus,
                c.dc_node,
                c.p_sh,
                c.q_sh,
                c.p_dc,
                c.v_m,
                c.v_sh,
                mark(vsh_bound),
                c.i_sh,
                mark(ish_bound)
            );
        }
        let _ = writeln!(out, "\nDC nodes (per-unit)");
        let _ = writeln!(out, "  {:>5} {:>9} {:>9}", "node", "Vdc", "Pdc");
        for n in &solution.dc_nodes {
            let _ = writeln!(out, "  {:>5} {:>9.4} {:>9.4}", n.id, n.vdc, n.p_dc);
        }
    }

    let _ = writeln!(out, "\nBinding limits");
    if solution.binding_limits.is_empty() {
        let _ = writeln!(out, "  none");
    }
    for limit in &solution.binding_limits {
        let line = match limit {
            BindingLimit::GeneratorQ { bus, bound, q } => format!("qG at bus {bus} = {q:.4} ({bound:?})"),
            BindingLimit::ConverterVsh { converter, bound, v_sh } => {
                format!("Vsh of VSC {converter} = {v_sh:.4} ({bound:?})")
            }
            BindingLimit::ConverterIsh { converter, i_sh } => format!("Ish of VSC {converter} = {i_sh:.4} (Max)"),
        };
        let _ = writeln!(out, "  {line}");
    }

    let t = solution.timings;
    let _ = writeln!(
        out,
        "\nTimings (ms): parse {:.3}, analyze {:.3}, iterate {:.3}",
        t.parse_ms, t.analyze_ms, t.iterate_ms
    );
    let s = solution.solver_stats;
    let _ = writeln!(
        out,
        "Linear solver: {} symbolic analyses, {} factorizations, dimension {}, {} nonzeros",
        s.symbolic_analyses, s.numeric_factorizations, solution.dimension, solution.jacobian_nnz
    );
    out
}
