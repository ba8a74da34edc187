//! Parsers and builders for every external input: sequences, residue
//! coordinates, interaction and similarity edges, annotations, sequence
//! feature tables, and the synthetic fixture generator.

mod annotations;
mod coords;
mod fasta;
mod features;
mod fixture;
mod homology;
mod ppi;

pub use annotations::{
    parse_annotations, temporal_split, write_annotations, AnnotationRecord, DatasetSplit,
};
pub use coords::{parse_coords, write_coords, CoordinateRecord, Residue};
pub use fasta::{parse_fasta, write_fasta, SequenceRecord};
pub use features::{load_feature_table, toy_sequence_features, FeatureTable};
pub use fixture::{synth_fixture, FixtureBundle, FixtureConfig};
pub use homology::build_homology_network;
pub use ppi::{parse_ppi_tsv, parse_similarity_tsv, PpiEdgeList, SimilarityEdgeList};
