use detmip::instances::{fixtures, hard_knapsack, random_mip, RandomMipParams};
use detmip::model::{parse_mps, write_mps, MipModel};

fn same(a: &MipModel, b: &MipModel) {
    assert_eq!(a.num_vars(), b.num_vars());
    assert_eq!(a.num_cons(), b.num_cons());
    assert_eq!(a.objective_sense(), b.objective_sense());
    assert_eq!(a.objective(), b.objective());
    assert_eq!(a.objective_offset(), b.objective_offset());
    assert_eq!(a.rows(), b.rows());
    assert_eq!(a.rhs(), b.rhs());
    assert_eq!(a.lower(), b.lower());
    assert_eq!(a.upper(), b.upper());
    assert_eq!(a.integrality(), b.integrality());
}

#[test]
fn written_models_parse_back() {
    let mut models: Vec<MipModel> = fixtures().into_iter().map(|(_, m)| m).collect();
    models.extend((0..30).map(|s| random_mip(s, &RandomMipParams::default())));
    models.push(hard_knapsack(0, 30, 3));
    for m in &models {
        let text = write_mps(m);
        let back = parse_mps(&text).unwrap_or_else(|e| panic!("{}: {e}", m.name()));
        same(m, &back);
    }
}
