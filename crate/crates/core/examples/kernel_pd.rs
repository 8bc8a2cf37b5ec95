//! Smallest eigenvalues of the resemblance matrix and its hashed counterparts
//! for a random collection of sets.

use bbit_svm::dataio::{LabeledDataset, SparseBinarySet};
use bbit_svm::kernelcheck::{
    bbit_matrix, expanded_gram, min_eigenvalue, minwise_matrix, psd_tolerance, resemblance_matrix,
    BbitSelection,
};
use bbit_svm::sketching::{sketch_dataset, FamilyId, FamilyKind};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> bbit_svm::Result<()> {
    let d = 1u64 << 12;
    let n = 30;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let sets: Vec<SparseBinarySet> = (0..n)
        .map(|_| {
            let f = rng.random_range(5..200);
            let ix = sample(&mut rng, d as usize, f)
                .into_iter()
                .map(|x| x as u32)
                .collect();
            SparseBinarySet::new(ix, d)
        })
        .collect::<Result<_, _>>()?;
    let data = LabeledDataset::new(sets.clone(), vec![1; n], d)?;
    let sketches = sketch_dataset(&data, 64, 2, FamilyKind::Exact, 1)?;

    let perm = FamilyId::new(FamilyKind::Exact, d, 1)?.member(0);
    for gram in [
        resemblance_matrix(&sets)?,
        minwise_matrix(&sets, &perm)?,
        bbit_matrix(&sketches, BbitSelection::Single(0))?,
        bbit_matrix(&sketches, BbitSelection::Averaged)?,
        expanded_gram(&sketches, true)?,
    ] {
        println!(
            "{:<14} min eigenvalue {:+.3e}",
            gram.kind().to_string(),
            min_eigenvalue(&gram)?
        );
    }
    println!("tolerance {:.1e}", psd_tolerance(n));
    Ok(())
}
