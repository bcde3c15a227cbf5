// Turn captions into minimally edited counterfactual captions.

use cfpairs::backends::{BackendSuite, MockDescriptor};
use cfpairs::capgen::{make_counterfactual, CaptionGenConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let suite = BackendSuite::mock(MockDescriptor { dim: 16, seed: 1 });
    let cfg = CaptionGenConfig::default();
    let captions = [
        ("1", "A small dog sitting on the wooden bench"),
        ("2", "A young man looking at the white car"),
        ("3", "Running quickly"),
    ];
    for (id, caption) in captions {
        let outcome = make_counterfactual(id, caption, &cfg, &suite)?;
        match &outcome.record {
            Some(r) => println!(
                "{caption:?} -> {:?} ({} -> {}, sim {:.3}, ppl {:.1})",
                r.pair.counterfactual, r.pair.altered_from, r.pair.altered_to, r.similarity, r.perplexity
            ),
            None => println!("{caption:?} rejected: {:?}", outcome.rejection),
        }
        println!("  sites {} proposed {} nouns {} in range {}", outcome.log.sites, outcome.log.proposed, outcome.log.after_pos, outcome.log.after_similarity);
    }
    Ok(())
}

fn main() {
    run_example().unwrap();
}
