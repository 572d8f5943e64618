use super::matrix::Matrix;

/// Identifies the layer that produced a cached activation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LayerId {
    StateProjection { task: usize },
    SharedEncoder { layer: usize },
    TaskEncoder { task: usize, layer: usize },
    Attention,
    ActionProjection { task: usize },
    Decoder { task: usize, layer: usize },
    /// Free-form id for standalone layers.
    Plain(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CacheEntry {
    pub id: LayerId,
    pub output: Matrix,
}

/// Post-activation outputs of one forward pass, in forward order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ForwardCache {
    entries: Vec<CacheEntry>,
}

impl ForwardCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, id: LayerId, output: Matrix) {
        self.entries.push(CacheEntry { id, output });
    }

    pub fn entries(&self) -> &[CacheEntry] {
        &self.entries
    }

    pub fn get(&self, id: LayerId) -> Option<&Matrix> {
        self.entries.iter().find(|e| e.id == id).map(|e| &e.output)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn extend(&mut self, other: ForwardCache) {
        self.entries.extend(other.entries);
    }
}

/// Activation energy: the summed magnitude of every cached neuron output.
pub fn energy_of(cache: &ForwardCache) -> f64 {
    cache.entries.iter().map(|e| e.output.abs_sum()).sum()
}
