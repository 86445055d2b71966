//! Text and CSV renderings shaped like published regression tables:
//! coefficient with significance stars, t-statistic in parentheses beneath,
//! then adjusted R², AIC and observation count.

use super::{GrangerResult, RegressionResult};

/// `***` at 1%, `**` at 5%, `*` at 10%.
pub fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        ""
    }
}

fn row_names(columns: &[(String, RegressionResult)]) -> Vec<String> {
    let mut names: Vec<String> = Vec::new();
    for (_, r) in columns {
        for n in &r.names {
            if !names.contains(n) {
                names.push(n.clone());
            }
        }
    }
    names
}

/// One column per labelled result; rows are the union of coefficient names.
pub fn regression_table_text(columns: &[(String, RegressionResult)]) -> String {
    let names = row_names(columns);
    let label_w = names.iter().map(String::len).max().unwrap_or(0).max("Adjusted R2".len()) + 2;
    let col_w = columns.iter().map(|(l, _)| l.len()).max().unwrap_or(0).max(16) + 2;
    let mut out = String::new();
    let rule = "-".repeat(label_w + col_w * columns.len());

    out.push_str(&format!("{:<label_w$}", "Variables"));
    for (label, _) in columns {
        out.push_str(&format!("{label:>col_w$}"));
    }
    out.push('\n');
    out.push_str(&rule);
    out.push('\n');
    for name in &names {
        out.push_str(&format!("{name:<label_w$}"));
        for (_, r) in columns {
            let cell = r
                .index(name)
                .map(|i| format!("{:.3e}{}", r.coefficients[i], stars(r.p_values[i])))
                .unwrap_or_default();
            out.push_str(&format!("{cell:>col_w$}"));
        }
        out.push('\n');
        out.push_str(&" ".repeat(label_w));
        for (_, r) in columns {
            let cell = r.index(name).map(|i| format!("({:.3})", r.t_stats[i])).unwrap_or_default();
            out.push_str(&format!("{cell:>col_w$}"));
        }
        out.push('\n');
    }
    out.push_str(&rule);
    out.push('\n');
    let footer: [(&str, Box<dyn Fn(&RegressionResult) -> String>); 4] = [
        ("Lags (m)", Box::new(|r| r.lags.map(|m| m.to_string()).unwrap_or_else(|| "-".into()))),
        ("Adjusted R2", Box::new(|r| format!("{:.3}", r.adj_r_squared))),
        ("AIC", Box::new(|r| format!("{:.1}", r.aic))),
        ("No. of obs.", Box::new(|r| r.nobs.to_string())),
    ];
    for (label, f) in &footer {
        out.push_str(&format!("{label:<label_w$}"));
        for (_, r) in columns {
            out.push_str(&format!("{:>col_w$}", f(r)));
        }
        out.push('\n');
    }
    out.push_str("t-statistics in parentheses; *, **, *** denote significance at 0.1, 0.05 and 0.01.\n");
    out
}

/// Long format: `model,variable,coefficient,std_error,t_stat,p_value,stars`
/// followed by `adj_r2`, `aic`, `nobs` and `lags` summary rows.
pub fn regression_table_csv(columns: &[(String, RegressionResult)]) -> String {
    let mut out = String::from("model,variable,coefficient,std_error,t_stat,p_value,stars\n");
    for (label, r) in columns {
        for i in 0..r.names.len() {
            out.push_str(&format!(
                "{label},{},{},{},{},{},{}\n",
                r.names[i],
                r.coefficients[i],
                r.std_errors[i],
                r.t_stats[i],
                r.p_values[i],
                stars(r.p_values[i])
            ));
        }
        out.push_str(&format!("{label},adj_r2,{},,,,\n", r.adj_r_squared));
        out.push_str(&format!("{label},aic,{},,,,\n", r.aic));
        out.push_str(&format!("{label},nobs,{},,,,\n", r.nobs));
        if let Some(m) = r.lags {
            out.push_str(&format!("{label},lags,{m},,,,\n"));
        }
    }
    out
}

pub const GRANGER_HEADER: [&str; 4] = ["H0", "Max-lag", "F-statistics", "p-value (Prob>F)"];

pub fn granger_table_text(results: &[GrangerResult]) -> String {
    let h0: Vec<String> = results.iter().map(GrangerResult::null_hypothesis).collect();
    let w0 = h0.iter().map(String::len).max().unwrap_or(0).max(GRANGER_HEADER[0].len()) + 2;
    let mut out = format!(
        "{:<w0$}{:>10}{:>15}{:>19}\n",
        GRANGER_HEADER[0], GRANGER_HEADER[1], GRANGER_HEADER[2], GRANGER_HEADER[3]
    );
    out.push_str(&"-".repeat(w0 + 44));
    out.push('\n');
    for (r, h) in results.iter().zip(&h0) {
        out.push_str(&format!("{h:<w0$}{:>10}{:>15.3}{:>19.3}\n", r.max_lag, r.f_stat, r.p_value));
    }
    out
}

pub fn granger_table_csv(results: &[GrangerResult]) -> String {
    let mut out = String::from("h0,direction,max_lag,f_statistic,p_value,df_num,df_den,nobs\n");
    for r in results {
        out.push_str(&format!(
            "\"{}\",{},{},{},{},{},{},{}\n",
            r.null_hypothesis(),
            r.direction(),
            r.max_lag,
            r.f_stat,
            r.p_value,
            r.df_num,
            r.df_den,
            r.nobs
        ));
    }
    out
}
