use rand::Rng;
use serde::{Deserialize, Serialize};

/// Which parameter blocks a model carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Layout {
    /// `v` and the shared gate logit `a`.
    P2,
    /// `v`, `c` and `q` (length `n`).
    GP2,
    /// `W`, `A`, `b`, `c` and `q` (length `d`).
    Transition,
}

/// Named parameter blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Block {
    /// Encoder weights, `n x d`, row-major.
    W,
    /// Decoder weights, `d x n`, row-major.
    A,
    /// Decoder bias, length `n`.
    B,
    /// Item popularity logits, length `n`.
    V,
    /// Gate weights on the preference vector, length `n`.
    C,
    /// Gate weights on `v` (length `n`) or on `h` (length `d`).
    Q,
    /// Shared gate logit.
    GateLogit,
}

impl Block {
    pub const ALL: [Block; 7] = [
        Block::W,
        Block::A,
        Block::B,
        Block::V,
        Block::C,
        Block::Q,
        Block::GateLogit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Block::W => "W",
            Block::A => "A",
            Block::B => "b",
            Block::V => "v",
            Block::C => "c",
            Block::Q => "q",
            Block::GateLogit => "a",
        }
    }

    pub fn from_name(name: &str) -> Option<Block> {
        Block::ALL.into_iter().find(|b| b.name() == name)
    }

    fn slot(self) -> usize {
        self as usize
    }
}

impl Layout {
    /// Shape of `block` as `(rows, cols)`, or `None` when the layout omits it.
    pub fn shape(self, block: Block, n: usize, d: usize) -> Option<(usize, usize)> {
        use Block::*;
        match (self, block) {
            (Layout::P2, V) => Some((1, n)),
            (Layout::P2, GateLogit) => Some((1, 1)),
            (Layout::GP2, V | C | Q) => Some((1, n)),
            (Layout::Transition, W) => Some((n, d)),
            (Layout::Transition, A) => Some((d, n)),
            (Layout::Transition, B | C) => Some((1, n)),
            (Layout::Transition, Q) => Some((1, d)),
            _ => None,
        }
    }

    pub fn blocks(self) -> impl Iterator<Item = Block> {
        Block::ALL
            .into_iter()
            .filter(move |&b| self.shape(b, 1, 1).is_some())
    }
}

/// All learnable quantities of one model. Blocks the layout omits are empty.
#[derive(Debug, Clone, PartialEq)]
pub struct M2Params {
    pub layout: Layout,
    pub n: usize,
    pub d: usize,
    blocks: [Vec<f64>; 7],
}

impl M2Params {
    pub fn zeros(layout: Layout, n: usize, d: usize) -> Self {
        let blocks = Block::ALL.map(|b| {
            let len = layout.shape(b, n, d).map(|(r, c)| r * c).unwrap_or(0);
            vec![0.0; len]
        });
        M2Params { layout, n, d, blocks }
    }

    /// Encoder and decoder weights uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`
    /// (fan-in `n` for `W`, `d` for `A`); every other block starts at zero.
    pub fn init<R: Rng>(layout: Layout, n: usize, d: usize, rng: &mut R) -> Self {
        let mut params = M2Params::zeros(layout, n, d);
        if layout == Layout::Transition {
            let bound_w = 1.0 / (n.max(1) as f64).sqrt();
            for x in params.block_mut(Block::W) {
                *x = rng.gen_range(-bound_w..=bound_w);
            }
            let bound_a = 1.0 / (d as f64).sqrt();
            for x in params.block_mut(Block::A) {
                *x = rng.gen_range(-bound_a..=bound_a);
            }
        }
        params
    }

    /// Assembles parameters from raw blocks, checking every shape.
    pub fn from_blocks(
        layout: Layout,
        n: usize,
        d: usize,
        blocks: impl IntoIterator<Item = (Block, Vec<f64>)>,
    ) -> Result<Self, (Block, String)> {
        let mut params = M2Params::zeros(layout, n, d);
        let mut seen = [false; 7];
        for (block, data) in blocks {
            let Some((rows, cols)) = layout.shape(block, n, d) else {
                return Err((block, format!("block not used by layout {layout:?}")));
            };
            if data.len() != rows * cols {
                return Err((
                    block,
                    format!("expected {} values ({rows}x{cols}), found {}", rows * cols, data.len()),
                ));
            }
            params.blocks[block.slot()] = data;
            seen[block.slot()] = true;
        }
        if let Some(missing) = layout.blocks().find(|b| !seen[b.slot()]) {
            return Err((missing, "missing block".to_string()));
        }
        Ok(params)
    }

    pub fn block(&self, block: Block) -> &[f64] {
        &self.blocks[block.slot()]
    }

    pub fn block_mut(&mut self, block: Block) -> &mut [f64] {
        &mut self.blocks[block.slot()]
    }

    /// Present blocks in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (Block, &[f64])> {
        self.layout.blocks().map(move |b| (b, self.block(b)))
    }

    pub fn shape(&self, block: Block) -> Option<(usize, usize)> {
        self.layout.shape(block, self.n, self.d)
    }

    /// A zero-filled container with the same shapes, used for gradients.
    pub fn zeros_like(&self) -> Self {
        M2Params::zeros(self.layout, self.n, self.d)
    }

    pub fn fill_zero(&mut self) {
        for block in &mut self.blocks {
            block.iter_mut().for_each(|x| *x = 0.0);
        }
    }

    /// Sum of squares of every learnable entry.
    pub fn squared_norm(&self) -> f64 {
        self.blocks.iter().flatten().map(|x| x * x).sum()
    }

    /// Adds `2 * lambda * theta` to `grads`.
    pub fn add_l2_gradient(&self, lambda: f64, grads: &mut M2Params) {
        if lambda == 0.0 {
            return;
        }
        for (g, p) in grads.blocks.iter_mut().zip(&self.blocks) {
            for (gi, pi) in g.iter_mut().zip(p) {
                *gi += 2.0 * lambda * pi;
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.blocks.iter().flatten().all(|x| x.is_finite())
    }

    pub(crate) fn blocks_mut(&mut self) -> impl Iterator<Item = &mut Vec<f64>> {
        self.blocks.iter_mut()
    }

    pub(crate) fn raw_blocks(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.blocks.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn layouts_store_only_their_blocks() {
        let p2 = M2Params::zeros(Layout::P2, 5, 3);
        assert_eq!(p2.iter().map(|(b, _)| b.name()).collect::<Vec<_>>(), vec!["v", "a"]);
        let gp2 = M2Params::zeros(Layout::GP2, 5, 3);
        assert_eq!(gp2.block(Block::Q).len(), 5);
        let t = M2Params::zeros(Layout::Transition, 5, 3);
        assert_eq!(
            t.iter().map(|(b, x)| (b.name(), x.len())).collect::<Vec<_>>(),
            vec![("W", 15), ("A", 15), ("b", 5), ("c", 5), ("q", 3)]
        );
        assert!(t.block(Block::V).is_empty());
    }

    #[test]
    fn init_bounds_and_zero_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = M2Params::init(Layout::Transition, 16, 4, &mut rng);
        assert!(p.block(Block::W).iter().all(|x| x.abs() <= 0.25));
        assert!(p.block(Block::A).iter().all(|x| x.abs() <= 0.5));
        assert!(p.block(Block::W).iter().any(|&x| x != 0.0));
        assert!(p.block(Block::B).iter().chain(p.block(Block::C)).chain(p.block(Block::Q)).all(|&x| x == 0.0));
    }

    #[test]
    fn from_blocks_names_bad_shape() {
        let err = M2Params::from_blocks(
            Layout::Transition,
            3,
            2,
            [
                (Block::W, vec![0.0; 4]),
                (Block::A, vec![0.0; 6]),
                (Block::B, vec![0.0; 3]),
                (Block::C, vec![0.0; 3]),
                (Block::Q, vec![0.0; 2]),
            ],
        )
        .unwrap_err();
        assert_eq!(err.0, Block::W);
    }

    #[test]
    fn l2_gradient() {
        let mut p = M2Params::zeros(Layout::P2, 2, 1);
        p.block_mut(Block::GateLogit)[0] = 2.0;
        assert_eq!(p.squared_norm(), 4.0);
        let mut g = p.zeros_like();
        p.add_l2_gradient(0.1, &mut g);
        assert!((g.block(Block::GateLogit)[0] - 0.4).abs() < 1e-15);
    }
}
