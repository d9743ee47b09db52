//! Emission of gnuplot-compatible plot scripts.
//!
//! Scripts are plain-text artifacts referencing their CSV by relative path;
//! the tool never executes them and carries no plotting dependency.

use cavsim_core::oracle::Variant;

/// Script rendering the two-stage population curves (one panel per stage)
/// from a trajectory CSV.
pub fn trajectory_script(csv_name: &str, variant: Variant) -> String {
    let stage_b_curves: &[(usize, &str)] = match variant {
        Variant::Qubit => &[
            (3, "P1'"),
            (4, "P2'"),
            (5, "P3'"),
            (6, "P4'"),
            (8, "Pp'"),
        ],
        Variant::Qutrit => &[
            (3, "P1'"),
            (4, "P2'"),
            (5, "P3'"),
            (6, "P4'"),
            (7, "P5'"),
            (8, "Pp'"),
        ],
    };
    let mut b_plots = Vec::new();
    for (col, title) in stage_b_curves {
        b_plots.push(format!(
            "    csv using 1:(strcol(2) eq 'B' ? column({col}) : NaN) with lines title \"{title}\""
        ));
    }
    let a_plots = [
        (3, "P1"),
        (4, "P2"),
        (5, "P3"),
        (8, "Pp"),
    ]
    .iter()
    .map(|(col, title)| {
        format!(
            "    csv using 1:(strcol(2) eq 'A' ? column({col}) : NaN) with lines title \"{title}\""
        )
    })
    .collect::<Vec<_>>();
    format!(
        "# Population dynamics of the two protocol stages ({variant} run).\n\
         # Render with: gnuplot <this file>\n\
         csv = '{csv_name}'\n\
         set datafile separator ','\n\
         set key autotitle columnhead\n\
         set terminal pngcairo size 900,700\n\
         set output '{stem}.png'\n\
         set multiplot layout 2,1\n\
         set xlabel 'g_A t'\n\
         set ylabel 'population'\n\
         set yrange [0:1.05]\n\
         set key outside right\n\
         set title 'stage A'\n\
         plot \\\n{a}\n\
         set title 'stage B'\n\
         plot \\\n{b}\n\
         unset multiplot\n",
        variant = variant,
        csv_name = csv_name,
        stem = csv_name.trim_end_matches(".csv"),
        a = a_plots.join(", \\\n"),
        b = b_plots.join(", \\\n"),
    )
}

/// Script rendering success probability and fidelity against the swept
/// parameter.
pub fn sweep_script(csv_name: &str, parameter: &str) -> String {
    format!(
        "# Success probability and conditional fidelity vs {parameter}.\n\
         # Render with: gnuplot <this file>\n\
         csv = '{csv_name}'\n\
         set datafile separator ','\n\
         set key autotitle columnhead\n\
         set terminal pngcairo size 900,700\n\
         set output '{stem}.png'\n\
         set multiplot layout 2,1\n\
         set xlabel '{parameter} / g_A'\n\
         set ylabel 'success probability'\n\
         set yrange [0:1.05]\n\
         plot csv using 1:2 with lines title 'P_A', \\\n\
         \x20    csv using 1:4 with lines title 'P_B'\n\
         set ylabel 'fidelity'\n\
         plot csv using 1:3 with lines title 'F_A', \\\n\
         \x20    csv using 1:5 with lines title 'F_B'\n\
         unset multiplot\n",
        parameter = parameter,
        csv_name = csv_name,
        stem = csv_name.trim_end_matches(".csv"),
    )
}
