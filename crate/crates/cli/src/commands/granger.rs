use perpsim::econometrics::{granger_table_csv, granger_table_text, granger_test_named};

use crate::error::CliError;
use crate::io::{self, OutDir};
use crate::GrangerArgs;

fn column(path: &std::path::Path, text: &str, name: &str) -> Result<Vec<f64>, CliError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| CliError::io(path, e))?.clone();
    let index = headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| CliError::Data(format!("{}: no column `{name}` (have {})", path.display(), headers.iter().collect::<Vec<_>>().join(", "))))?;
    let mut values = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| CliError::Data(format!("{}: line {line}: {e}", path.display())))?;
        let field = record.get(index).unwrap_or("");
        let value: f64 = field
            .parse()
            .map_err(|_| CliError::Data(format!("{}: line {line}: bad number `{field}` in column `{name}`", path.display())))?;
        if !value.is_finite() {
            return Err(CliError::Data(format!("{}: line {line}: non-finite value in column `{name}`", path.display())));
        }
        values.push(value);
    }
    Ok(values)
}

pub fn granger(args: &GrangerArgs) -> Result<(), CliError> {
    if args.max_lag == 0 {
        return Err(CliError::Usage("--max-lag must be at least 1".into()));
    }
    let text = io::read(&args.input)?;
    let x = column(&args.input, &text, &args.x)?;
    let y = column(&args.input, &text, &args.y)?;
    let mut results = vec![granger_test_named(&x, &y, args.max_lag, &args.x, &args.y)?];
    if !args.one_way {
        results.push(granger_test_named(&y, &x, args.max_lag, &args.y, &args.x)?);
    }
    let table = granger_table_text(&results);
    let mut out = OutDir::create(&args.out)?;
    out.write("granger.txt", &table)?;
    out.write("granger.csv", &granger_table_csv(&results))?;
    print!("{table}");
    #[derive(serde::Serialize)]
    struct Parameters<'a> {
        x: &'a str,
        y: &'a str,
        max_lag: usize,
        both_directions: bool,
    }
    out.finish(
        "granger",
        Parameters { x: &args.x, y: &args.y, max_lag: args.max_lag, both_directions: !args.one_way },
        vec![(args.input.display().to_string(), io::sha256(&text))],
    )
}
