//! Library-level run through generation, training and the uncertainty methods.

use cdf2pdf::datasets::{
    gen_ecdf_onoff, gen_ecdf_sir, read_dataset, split_dataset, write_dataset, PriorBox, SirObservation, SplitSpec,
};
use cdf2pdf::nn::{load_model, save_model, Activation, Loss, NetworkSpec};
use cdf2pdf::simulators::{SirParams, SirScenario};
use cdf2pdf::training::{train_regressor, Budget, Samples, TrainConfig};
use cdf2pdf::uncertainty::{
    cdf_grid, conformal_calibrate, coverage_check, ensemble_envelope, linspace, pdf_grid, weight_fluctuate, PdfCurve,
    Response,
};

fn quick_config() -> TrainConfig {
    TrainConfig {
        budget: Budget::Iterations(300),
        batch_size: 256,
        learning_rate: 3e-3,
        ..TrainConfig::default()
    }
}

#[test]
fn onoff_dataset_to_conformal_band() {
    let data = gen_ecdf_onoff(150, 40, PriorBox::ONOFF, 5).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    write_dataset(&path, &data).unwrap();
    assert_eq!(read_dataset(&path).unwrap(), data);

    let split = split_dataset(&data, &SplitSpec::default()).unwrap();
    let train = Samples::from_dataset(&split.train);
    let val = Samples::from_dataset(&split.validation);
    let cal = Samples::from_dataset(&split.calibration);
    let spec = NetworkSpec::uniform(3, 2, 8, Activation::Silu, Activation::Sigmoid).with_seed(1);
    let out = train_regressor(&train, &val, &spec, &quick_config()).unwrap();
    assert!(out.best_val_loss < 0.05, "{}", out.best_val_loss);

    let model = dir.path().join("m.txt");
    save_model(&model, &out.network, 0).unwrap();
    let (net, _) = load_model(&model).unwrap();
    let grid = linspace(0.0, 10.0, 51);
    assert_eq!(pdf_grid(&net, (10.0, 10.0), &grid).unwrap(), pdf_grid(&out.network, (10.0, 10.0), &grid).unwrap());

    let calib = conformal_calibrate(&net, &cal, 0.32).unwrap();
    let cover = coverage_check(&net, &calib, &val).unwrap();
    assert!(cover > 0.5 && cover < 0.85, "{cover}");

    let curve = PdfCurve::evaluate(&net, (5.0, 5.0), &grid).unwrap();
    assert_eq!(curve.cdf, cdf_grid(&net, (5.0, 5.0), &grid).unwrap());
    assert!(curve.cdf.iter().all(|f| (0.0..=1.0).contains(f)));
}

#[test]
fn fluctuation_envelope_brackets_the_mean() {
    let data = gen_ecdf_onoff(60, 30, PriorBox::ONOFF, 8).unwrap();
    let split = split_dataset(&data, &SplitSpec::default()).unwrap();
    let spec = NetworkSpec::uniform(3, 2, 6, Activation::Tanh, Activation::Sigmoid).with_seed(4);
    let net = train_regressor(
        &Samples::from_dataset(&split.train),
        &Samples::from_dataset(&split.validation),
        &spec,
        &quick_config(),
    )
    .unwrap()
    .network;
    let ens = weight_fluctuate(&net, 0.01, 50, 3).unwrap();
    let grid = linspace(0.0, 8.0, 21);
    for response in [Response::Cdf, Response::Pdf] {
        let env = ensemble_envelope(&ens, (8.0, 12.0), &grid, 0.68, response).unwrap();
        for k in 0..grid.len() {
            assert!(env.lo[k] <= env.mean[k] && env.mean[k] <= env.hi[k]);
            assert!(env.hi[k] > env.lo[k]);
        }
    }
}

#[test]
fn sir_dataset_is_seeded_and_well_formed() {
    let scenario = SirScenario {
        horizon_days: 20,
        ..SirScenario::default()
    };
    let obs = SirObservation::generate(&scenario, SirParams::new(0.25, 6e-4).unwrap(), 1).unwrap();
    assert_eq!(obs.infected.len(), 20);
    let a = gen_ecdf_sir(6, 10, PriorBox::SIR, &scenario, &obs, 2).unwrap();
    let b = gen_ecdf_sir(6, 10, PriorBox::SIR, &scenario, &obs, 2).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 60);
    for r in &a.records {
        assert!(r.lambda >= 0.0 && r.lambda.is_finite());
        assert!(r.target > 0.0 && r.target <= 1.0);
        assert!(PriorBox::SIR.contains(r.theta1, r.theta2));
    }
    assert_eq!(a.meta.unwrap().observation.unwrap(), obs);
}

#[test]
fn huber_and_mse_share_the_training_protocol() {
    let data = gen_ecdf_onoff(80, 30, PriorBox::ONOFF, 13).unwrap();
    let split = split_dataset(&data, &SplitSpec::default()).unwrap();
    let (train, val) = (Samples::from_dataset(&split.train), Samples::from_dataset(&split.validation));
    let spec = NetworkSpec::uniform(3, 2, 6, Activation::Silu, Activation::Sigmoid).with_seed(2);
    for loss in [Loss::Mse, Loss::huber()] {
        let cfg = TrainConfig { loss, ..quick_config() };
        let out = train_regressor(&train, &val, &spec, &cfg).unwrap();
        let recomputed = out.network.mean_loss(&val.x, &val.y, &loss).unwrap();
        assert!((recomputed - out.best_val_loss).abs() <= 1e-12 * out.best_val_loss.max(1.0));
    }
}
