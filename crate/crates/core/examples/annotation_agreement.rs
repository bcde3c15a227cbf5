// Ingest caption-choice labels, summarize them, and measure agreement.

use cfpairs::dataset::annotations::{parse_csv, summarize_annotations};
use cfpairs::eval::{fleiss_kappa_labeled, ratings_from_annotations};

const LABELS: &str = "\
image_id,label,annotator_id,image_origin
a:orig,original,r1,from_original_caption
a:orig,original,r2,from_original_caption
a:orig,original,r3,from_original_caption
a:cf,counterfactual,r1,from_counterfactual_caption
a:cf,counterfactual,r2,from_counterfactual_caption
a:cf,both,r3,from_counterfactual_caption
b:orig,neither,r1,from_original_caption
b:orig,original,r2,from_original_caption
b:orig,neither,r3,from_original_caption
b:cf,counterfactual,r1,from_counterfactual_caption
b:cf,counterfactual,r2,from_counterfactual_caption
b:cf,counterfactual,r3,from_counterfactual_caption
";

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let records = parse_csv(LABELS)?;
    let summary = summarize_annotations(&records)?;
    let o = summary.overall;
    println!(
        "overall: correct {:.2}% incorrect {:.2}% neither {:.2}% both {:.2}%",
        o.correct_pct, o.incorrect_pct, o.neither_pct, o.both_pct
    );
    let (names, rows) = ratings_from_annotations(&records, 3);
    let agreement = fleiss_kappa_labeled(&rows, &names)?;
    println!("kappa {:.3} over {} images", agreement.kappa, agreement.n_items);
    Ok(())
}

fn main() {
    run_example().unwrap();
}
