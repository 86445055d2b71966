use serde::{Deserialize, Serialize};

/// Base units per lot. Positions are integer lots so that long and short
/// totals on the order book stay exactly equal.
pub const LOT_SIZE: f64 = 1e-8;

pub fn to_lots(quantity: f64) -> i64 {
    (quantity / LOT_SIZE).round() as i64
}

pub fn lots_to_base(lots: i64) -> f64 {
    lots as f64 * LOT_SIZE
}

/// Cross-margin account: collateral, a signed lot position and its signed
/// entry cost (`sum qty * price` over the open part).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MarginAccount {
    pub collateral: f64,
    pub lots: i64,
    pub cost: f64,
    pub realized_pnl: f64,
}

impl MarginAccount {
    pub fn base(&self) -> f64 {
        lots_to_base(self.lots)
    }

    pub fn entry_price(&self) -> Option<f64> {
        (self.lots != 0).then(|| self.cost / self.base())
    }

    pub fn unrealized_pnl(&self, mark: f64) -> f64 {
        self.base() * mark - self.cost
    }

    pub fn equity(&self, mark: f64) -> f64 {
        self.collateral + self.unrealized_pnl(mark)
    }

    pub fn notional(&self, mark: f64) -> f64 {
        self.base().abs() * mark
    }

    pub fn margin_ratio(&self, mark: f64) -> Option<f64> {
        let n = self.notional(mark);
        (n > 0.0).then(|| self.equity(mark) / n)
    }

    /// Lots of `signed` that enlarge exposure (the rest reduces it).
    pub fn opening_lots(&self, signed: i64) -> i64 {
        if self.lots == 0 || self.lots.signum() == signed.signum() {
            signed.abs()
        } else {
            (signed.abs() - self.lots.abs()).max(0)
        }
    }

    /// Applies a signed fill and returns the realized PnL.
    pub fn apply_fill(&mut self, signed: i64, price: f64) -> f64 {
        if signed == 0 {
            return 0.0;
        }
        if self.lots == 0 || self.lots.signum() == signed.signum() {
            self.lots += signed;
            self.cost += lots_to_base(signed) * price;
            return 0.0;
        }
        let avg = self.cost / self.base();
        let closing = signed.signum() * signed.abs().min(self.lots.abs());
        let pnl = (price - avg) * -lots_to_base(closing);
        self.lots += closing;
        self.cost = if self.lots == 0 { 0.0 } else { avg * self.base() };
        let rest = signed - closing;
        if rest != 0 {
            self.lots += rest;
            self.cost = lots_to_base(rest) * price;
        }
        self.collateral += pnl;
        self.realized_pnl += pnl;
        pnl
    }
}
