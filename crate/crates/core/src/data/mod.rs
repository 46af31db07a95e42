//! Synthetic multiview data: class prototypes on a sphere in input space,
//! optional class mixing for ambiguous samples, and vector-space analogs of
//! image augmentations.

mod augment;
mod io;
mod synth;

pub use augment::{augment, make_viewset, AugmentationKind, AugmentationSpec, ViewPolicy, ViewSet};
pub use io::{
    load_dataset, load_split, save_dataset, split_file_name, write_split_csv, DATASET_MAGIC,
    DATASET_VERSION,
};
pub use synth::{generate_dataset, nearest_prototype_accuracy, Dataset, Sample, Split, SynthConfig};

#[cfg(test)]
mod tests;
