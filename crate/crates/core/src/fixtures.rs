//! Bundled example networks.
//!
//! Binary frames `{a, b}` throughout. `CHAIN4` is the four-node chain with the
//! chain conditionals, `STAR5` the five-node star with the star conditionals;
//! `CHAIN3` and `STAR4` are their proper-prefix variants. `CHAIN4_SAMPLABLE`
//! puts the star conditionals on every edge of a four-node chain, which makes
//! it samplable. `PAIR_ROUNDED` has its table rounded to 6 digits. `VACUOUS_LEAVES`
//! hangs two vacuous leaves under the usual root marginal.

pub const CHAIN4: &str = include_str!("../fixtures/chain4.dsn");
pub const STAR5: &str = include_str!("../fixtures/star5.dsn");
pub const CHAIN3: &str = include_str!("../fixtures/chain3.dsn");
pub const STAR4: &str = include_str!("../fixtures/star4.dsn");
pub const CHAIN4_SAMPLABLE: &str = include_str!("../fixtures/chain4-samplable.dsn");
pub const PAIR_ROUNDED: &str = include_str!("../fixtures/pair-rounded.dsn");
pub const VACUOUS_LEAVES: &str = include_str!("../fixtures/vacuous-leaves.dsn");
