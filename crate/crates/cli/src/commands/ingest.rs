use perpsim::marketdata::remote::{DateRange, FeedClient, FeedConfig, HttpTransport, RemoteSeries};
use perpsim::marketdata::{write_activity, write_candles, GapPolicy};

use crate::error::CliError;
use crate::io::{self, OutDir};
use crate::IngestArgs;

pub fn ingest(args: &IngestArgs) -> Result<(), CliError> {
    let mut out = OutDir::create(&args.out)?;
    let mut inputs = Vec::new();
    if let Some(feed_path) = &args.feed {
        let text = io::read(feed_path)?;
        let feed = FeedConfig::from_toml(&text).map_err(|e| CliError::Usage(format!("{}: {e}", feed_path.display())))?;
        let (start, end) = (args.start.expect("clap requires --start"), args.end.expect("clap requires --end"));
        let range = DateRange::new(start, end)?;
        let cache = args.cache.clone().unwrap_or_else(|| args.out.join("cache"));
        let client = FeedClient::new(HttpTransport, cache);
        match client.fetch_remote(&feed, &range)? {
            RemoteSeries::Candles(c) => {
                out.write("candles.csv", &write_candles(&c))?;
                println!("{}: {} candles", feed.name, c.len());
            }
            RemoteSeries::Activity(a) => {
                out.write("activity.csv", &write_activity(&a))?;
                println!("{}: {} activity records", feed.name, a.len());
            }
        }
        inputs.push((feed_path.display().to_string(), io::sha256(&text)));
    }
    if let Some(path) = &args.candles {
        let candles = io::read_candles(path)?;
        out.write("candles.csv", &write_candles(&candles))?;
        println!("{}: {} candles", path.display(), candles.len());
        inputs.push((path.display().to_string(), io::sha256(&io::read(path)?)));
    }
    if let Some(path) = &args.activity {
        let source = args.source.expect("clap requires --source");
        let gaps = if args.forward_fill { GapPolicy::ForwardFill } else { GapPolicy::Reject };
        let series = io::read_activity(path, source, gaps)?;
        let imputed = series.imputed_dates();
        out.write("activity.csv", &write_activity(&series))?;
        println!("{}: {} activity records, {} imputed", path.display(), series.len(), imputed.len());
        inputs.push((path.display().to_string(), io::sha256(&io::read(path)?)));
    }
    if inputs.is_empty() {
        return Err(CliError::Usage("nothing to ingest: give --feed, --candles or --activity".into()));
    }
    #[derive(serde::Serialize)]
    struct Parameters {
        start: Option<chrono::NaiveDate>,
        end: Option<chrono::NaiveDate>,
        forward_fill: bool,
    }
    out.finish("ingest", Parameters { start: args.start, end: args.end, forward_fill: args.forward_fill }, inputs)
}
