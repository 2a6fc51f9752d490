#![no_main]

use hetnet_comp::svm::SvmModel;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(model) = SvmModel::from_json(text) {
        let _ = model.predict(&[7.0, -80.0]);
        let again = SvmModel::from_json(&model.to_json()).expect("a valid model reloads");
        assert_eq!(again, model);
    }
});
