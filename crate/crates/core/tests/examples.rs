#[allow(dead_code)]
mod caption_counterfactuals {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/caption_counterfactuals.rs"));
}

#[test]
fn caption_counterfactuals_runs() {
    caption_counterfactuals::run_example().expect("caption_counterfactuals example should run");
}

#[allow(dead_code)]
mod image_pair_selection {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/image_pair_selection.rs"));
}

#[test]
fn image_pair_selection_runs() {
    image_pair_selection::run_example().expect("image_pair_selection example should run");
}

#[allow(dead_code)]
mod build_mixes {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/build_mixes.rs"));
}

#[test]
fn build_mixes_runs() {
    build_mixes::run_example().expect("build_mixes example should run");
}

#[allow(dead_code)]
mod retrieval_eval {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/retrieval_eval.rs"));
}

#[test]
fn retrieval_eval_runs() {
    retrieval_eval::run_example().expect("retrieval_eval example should run");
}

#[allow(dead_code)]
mod itm_differences {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/itm_differences.rs"));
}

#[test]
fn itm_differences_runs() {
    itm_differences::run_example().expect("itm_differences example should run");
}

#[allow(dead_code)]
mod annotation_agreement {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/annotation_agreement.rs"));
}

#[test]
fn annotation_agreement_runs() {
    annotation_agreement::run_example().expect("annotation_agreement example should run");
}

#[allow(dead_code)]
mod statistics {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/statistics.rs"));
}

#[test]
fn statistics_runs() {
    statistics::run_example().expect("statistics example should run");
}

#[allow(dead_code)]
mod end_to_end {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/end_to_end.rs"));
}

#[test]
fn end_to_end_runs() {
    end_to_end::run_example().expect("end_to_end example should run");
}
