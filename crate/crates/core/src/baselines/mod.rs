//! Reference filters: linear Wiener, KLMS, exact KRLS and kernel ridge
//! regression (whose predictive mean is also the GP regression mean).

mod dictionary;
mod wiener;

pub use dictionary::{
    gaussian_kernel, klms_fit, klms_fit_dataset, krls_fit, krls_fit_dataset, krr_fit, DictionaryModel, KernelVariant,
};
pub use wiener::{wiener_fit, wiener_fit_dataset, LinearWienerModel};
