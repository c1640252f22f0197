use crate::error::Result;
use crate::graph::{Graph, Var};
use crate::layers::init::{Init, ParamSpec};
use crate::tensor::Tensor;

pub const EMBEDDING: &str = "embedding";

pub fn param_specs(table: Tensor, finetune: bool) -> Vec<ParamSpec> {
    let shape = table.shape().to_vec();
    let spec = ParamSpec::new(EMBEDDING, &shape, Init::Given(table));
    vec![if finetune { spec } else { spec.frozen() }]
}

/// Looks up `token_ids` in the `embedding` table, giving `[T, d]`. Id 0 is
/// padding and maps to zeros.
pub fn embedding_forward(g: &mut Graph<'_>, token_ids: &[usize]) -> Result<Var> {
    let table = g.param(EMBEDDING)?;
    g.gather(table, token_ids)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ParameterSet;

    #[test]
    fn maps_full_length_sequence() {
        let mut p = ParameterSet::new();
        p.insert(EMBEDDING, Tensor::filled(&[10, 4], 0.5), false).unwrap();
        let mut g = Graph::with_params(&p);
        let ids: Vec<usize> = (0..200).map(|i| i % 10).collect();
        let e = embedding_forward(&mut g, &ids).unwrap();
        assert_eq!(g.shape(e), &[200, 4]);
        assert!(!g.requires_grad(e));
        assert!(embedding_forward(&mut g, &[10]).is_err());
    }
}
