// Over-generate image pairs for one caption pair, filter, and keep the pair
// with the best directional similarity.

use cfpairs::backends::{BackendSuite, MockDescriptor};
use cfpairs::capgen::CaptionPair;
use cfpairs::imgen::{filter_pairs, overgenerate, select_best, GenerationConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let suite = BackendSuite::mock(MockDescriptor { dim: 16, seed: 1 });
    let pair = CaptionPair {
        source_id: "42".into(),
        original: "A cat sitting on the table".into(),
        counterfactual: "A dog sitting on the table".into(),
        altered_from: "cat".into(),
        altered_to: "dog".into(),
    };
    let cfg = GenerationConfig { n_candidates: 40, seed: 3, ..Default::default() };
    let over = overgenerate(&pair, &cfg, &suite)?;
    let generated = over.candidates.len();
    let survivors = filter_pairs(over.candidates, &cfg);
    println!("generated {generated}, passed filters {}", survivors.len());
    if let Some(best) = select_best(survivors) {
        println!(
            "selected seed {} p={:.2} clip_dir={:.3} image-image={:.3}",
            best.generation_seed,
            best.p,
            best.clip_dir.unwrap_or(f64::NAN),
            best.sim_image_image
        );
    }
    Ok(())
}

fn main() {
    run_example().unwrap();
}
