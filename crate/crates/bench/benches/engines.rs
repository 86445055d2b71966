use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use perpsim::agents::{run_experiment, ExperimentConfig};
use perpsim::exchanges::{Exchange, LobConfig, LobExchange, OrderRequest, OrderSide};
use perpsim::vamm::{SwapDirection, VammPool};
use perpsim::ExchangeKind;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pool_swaps(c: &mut Criterion) {
    // Fees ratchet the price on every round trip, so each iteration starts
    // from a fresh copy.
    let uniform = VammPool::uniform(3e9, 1e5, 0.001).unwrap();
    c.bench_function("uniform pool swap pair", |b| {
        b.iter_batched_ref(
            || uniform.clone(),
            |pool| {
                let out = pool.swap(SwapDirection::QuoteToBase, black_box(10_000.0)).unwrap();
                pool.swap(SwapDirection::BaseToQuote, out.amount_out).unwrap();
            },
            BatchSize::SmallInput,
        )
    });

    let mut ranged = VammPool::concentrated(30_000.0, 0.001, 60).unwrap();
    ranged.add_liquidity_l(1, 600.0, 1_500_000.0, 1e6, 1.0).unwrap();
    for i in 0..8 {
        let w = 0.05 * 1.6f64.powi(i);
        ranged.add_liquidity_l(2 + i as u64, 30_000.0 / (1.0 + w), 30_000.0 * (1.0 + w), 1e6, 1.0).unwrap();
    }
    c.bench_function("concentrated pool swap pair crossing ticks", |b| {
        b.iter_batched_ref(
            || ranged.clone(),
            |pool| {
                let out = pool.swap(SwapDirection::QuoteToBase, black_box(5e7)).unwrap();
                pool.swap(SwapDirection::BaseToQuote, out.amount_out).unwrap();
            },
            BatchSize::SmallInput,
        )
    });
}

fn order_book(c: &mut Criterion) {
    c.bench_function("lob 1000 mixed orders", |b| {
        b.iter_batched(
            || {
                let mut ex = LobExchange::new(LobConfig::default());
                for o in 0..20 {
                    ex.deposit(o, 1e7);
                }
                ex.begin_step(0, 30_000.0);
                (ex, ChaCha8Rng::seed_from_u64(3))
            },
            |(mut ex, mut rng)| {
                for _ in 0..1_000 {
                    let owner = rng.random_range(0..20);
                    let side = if rng.random_bool(0.5) { OrderSide::Buy } else { OrderSide::Sell };
                    let qty = rng.random_range(0.01..1.0);
                    let order = if rng.random_bool(0.6) {
                        OrderRequest::limit(owner, side, 30_000.0 + rng.random_range(-20.0..20.0), qty, 3.0)
                    } else {
                        OrderRequest::market(owner, side, qty, 3.0)
                    };
                    let _ = ex.submit(order);
                }
                ex
            },
            BatchSize::SmallInput,
        )
    });
}

fn simulation(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulation");
    group.sample_size(10);
    for kind in [ExchangeKind::Cex, ExchangeKind::Vamm, ExchangeKind::Oracle] {
        let config = ExperimentConfig { days: 30, seed: 1, engines: vec![kind], record_orders: false, ..Default::default() };
        group.bench_function(format!("30 days {kind:?}"), |b| b.iter(|| run_experiment(black_box(&config)).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, pool_swaps, order_book, simulation);
criterion_main!(benches);
