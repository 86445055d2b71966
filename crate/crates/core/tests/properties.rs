use chrono::NaiveDate;
use perpsim::decompose::decompose;
use perpsim::econometrics::granger_test;
use perpsim::exchanges::{Exchange, LobConfig, LobExchange, OrderRequest, OrderSide};
use perpsim::vamm::{SwapDirection, VammPool};
use perpsim::{ActivityField, ArimaGrid};
use proptest::prelude::*;

#[derive(Debug, Clone)]
enum Event {
    Limit { owner: u64, buy: bool, offset: i32, qty: f64 },
    Market { owner: u64, buy: bool, qty: f64 },
    Cancel(u64),
    Move(f64),
    Sweep,
}

fn event() -> impl Strategy<Value = Event> {
    prop_oneof![
        4 => (0..8u64, any::<bool>(), -30..30i32, 0.001..3.0f64)
            .prop_map(|(owner, buy, offset, qty)| Event::Limit { owner, buy, offset, qty }),
        3 => (0..8u64, any::<bool>(), 0.001..3.0f64).prop_map(|(owner, buy, qty)| Event::Market { owner, buy, qty }),
        1 => (0..8u64).prop_map(Event::Cancel),
        1 => (-0.03..0.03f64).prop_map(Event::Move),
        1 => Just(Event::Sweep),
    ]
}

fn side(buy: bool) -> OrderSide {
    if buy {
        OrderSide::Buy
    } else {
        OrderSide::Sell
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lob_stays_uncrossed_and_balanced(events in prop::collection::vec(event(), 1..300)) {
        let mut ex = LobExchange::new(LobConfig::default());
        for owner in 0..8 {
            ex.deposit(owner, 2e6);
        }
        let mut spot = 30_000.0;
        for (step, e) in events.into_iter().enumerate() {
            match e {
                Event::Limit { owner, buy, offset, qty } => {
                    let _ = ex.submit(OrderRequest::limit(owner, side(buy), spot + offset as f64, qty, 5.0));
                }
                Event::Market { owner, buy, qty } => {
                    let _ = ex.submit(OrderRequest::market(owner, side(buy), qty, 5.0));
                }
                Event::Cancel(owner) => ex.cancel_all(owner),
                Event::Move(r) => {
                    spot *= f64::exp(r);
                    ex.begin_step(step as u64, spot);
                }
                Event::Sweep => {
                    ex.risk_sweep();
                }
            }
            prop_assert!(!ex.book().is_crossed());
            let (long, short) = ex.open_interest_lots();
            prop_assert_eq!(long, short);
            let net: i64 = (0..8).map(|o| ex.account(o).map_or(0, |a| a.lots)).sum();
            prop_assert_eq!(net, 0);
        }
    }

    #[test]
    fn zero_fee_swaps_conserve_k(
        quote in 1e6..1e11f64,
        base in 1e2..1e6f64,
        swaps in prop::collection::vec((any::<bool>(), 0.0..0.2f64), 1..200),
    ) {
        let mut pool = VammPool::uniform(quote, base, 0.0).unwrap();
        let k = pool.k();
        for (buy, frac) in swaps {
            let (q, b) = pool.reserves();
            let (dir, amount) = if buy { (SwapDirection::QuoteToBase, frac * q) } else { (SwapDirection::BaseToQuote, frac * b) };
            pool.swap(dir, amount).unwrap();
            let (q, b) = pool.reserves();
            prop_assert!(((q * b - k) / k).abs() <= 1e-9);
        }
    }

    #[test]
    fn arima_split_reconstructs_the_series(
        shocks in prop::collection::vec(-1.0..1.0f64, 60..160),
        level in -1e4..1e4f64,
        phi in -0.9..0.9f64,
    ) {
        let mut x = 0.0;
        let series: Vec<f64> = shocks.iter().map(|e| { x = phi * x + e; level + x }).collect();
        let dates: Vec<NaiveDate> = (0..series.len())
            .map(|i| NaiveDate::from_ymd_opt(2021, 1, 1).unwrap() + chrono::Duration::days(i as i64))
            .collect();
        let d = decompose(ActivityField::Volume, &dates, &series, &ArimaGrid::new(2, 1, 1)).unwrap();
        let scale = series.iter().map(|v| v.abs()).fold(1.0, f64::max);
        for t in 0..series.len() {
            prop_assert!((d.expected[t] + d.unexpected[t] - series[t]).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn granger_is_affine_invariant(
        pairs in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 80..150),
        a in prop_oneof![-50.0..-0.1f64, 0.1..50.0f64],
        b in -1e3..1e3f64,
    ) {
        let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let mut y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        for t in 1..y.len() {
            y[t] += 0.4 * x[t - 1];
        }
        let base = granger_test(&x, &y, 3).unwrap();
        let x2: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let y2: Vec<f64> = y.iter().map(|v| 2.0 * v - 7.0).collect();
        let moved = granger_test(&x2, &y2, 3).unwrap();
        prop_assert!((base.f_stat - moved.f_stat).abs() <= 1e-6 * base.f_stat.abs().max(1.0));
    }
}
