// Recall@K for caption-to-image and image-to-caption retrieval.

use cfpairs::backends::{BackendSuite, ImageRef, ImageSource, MockDescriptor};
use cfpairs::backends::mock::MockPairGenerator;
use cfpairs::eval::{retrieval_recall, retrieval_recall_itm, Direction, DEFAULT_KS};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let desc = MockDescriptor { dim: 32, seed: 5 };
    let suite = BackendSuite::mock(desc);
    let render = MockPairGenerator::new(desc);
    let captions: Vec<String> = ["cat", "dog", "horse", "bus", "pizza", "boat", "kite", "clock"]
        .iter()
        .map(|w| format!("a {w} near the window"))
        .collect();
    let images: Vec<ImageRef> = captions
        .iter()
        .enumerate()
        .map(|(i, c)| render.render(c, i as u64))
        .collect::<Result<_, _>>()?;
    let text = captions.iter().map(|c| suite.text_encoder.encode_text(c)).collect::<Result<Vec<_>, _>>()?;
    let img = images.iter().map(|i| suite.image_encoder.encode_image(i)).collect::<Result<Vec<_>, _>>()?;
    let gold: Vec<usize> = (0..captions.len()).collect();
    let ir = retrieval_recall(&text, &img, &gold, &DEFAULT_KS, Direction::ImageRetrieval)?;
    let tr = retrieval_recall(&img, &text, &gold, &DEFAULT_KS, Direction::TextRetrieval)?;
    println!("image retrieval {:?}", ir.recall_at);
    println!("text retrieval  {:?}", tr.recall_at);
    let images: Vec<ImageRef> = images
        .into_iter()
        .map(|i| ImageRef { source: ImageSource::Original, ..i })
        .collect();
    let itm = retrieval_recall_itm(&captions, &images, suite.itm_scorer.as_ref(), &DEFAULT_KS, Direction::ImageRetrieval)?;
    println!("image retrieval via ITM scorer {:?}", itm.recall_at);
    Ok(())
}

fn main() {
    run_example().unwrap();
}
