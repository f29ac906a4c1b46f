use kitchen_core::dataset::read_dataset;
use kitchen_core::lstm::{evaluate, load_model};

use super::{create_dir, featurize_all, write_file, write_json};
use crate::error::{CliError, DataContext};
use crate::ReportArgs;

pub fn run(args: &ReportArgs) -> Result<(), CliError> {
    log::info!(
        "report: resolved config {{\"model\":{:?},\"data\":{:?},\"window\":{},\"landmarks\":{},\"motion_threshold\":{}}}",
        args.model,
        args.data,
        args.window,
        args.landmarks,
        args.motion_threshold
    );
    let model = load_model(&args.model).data_context(format!("model {}", args.model.display()))?;
    let data = read_dataset(&args.data, args.landmarks)
        .data_context(format!("dataset {}", args.data.display()))?;
    let features = featurize_all(&data, args.window, args.landmarks, args.motion_threshold)?;
    let report = evaluate(&model, &features).data_context("evaluating")?;
    let text = format!("{}\n{}", report.render(), report.render_confusion());
    print!("{text}");
    if let Some(dir) = &args.out {
        create_dir(dir)?;
        write_file(&dir.join("report.txt"), &text)?;
        write_json(&dir.join("report.json"), &report)?;
    }
    Ok(())
}
