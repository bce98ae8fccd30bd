//! Camera-frame processing, in pipeline order:
//!
//! 1. YUYV422 to HSV ([`color`])
//! 2. horizon and field-edge filter ([`boundary`])
//! 3. integral-image candidate selection ([`integral`], [`candidates`])
//! 4. inscribed-disc refinement ([`disc`]) and three-filter ball
//!    classification ([`candidates::classify_ball`])
//!
//! plus probabilistic Hough line detection with segment merging ([`lines`])
//! and centre-circle fitting over the short remnants ([`circle`]).

pub mod annotate;
pub mod boundary;
pub mod candidates;
pub mod circle;
pub mod color;
pub mod disc;
pub mod frame;
pub mod integral;
pub mod lines;
pub mod mask;
pub mod pipeline;

pub use annotate::annotate;
pub use boundary::{field_edge_filter, FieldBoundary};
pub use candidates::{classify_ball, select_candidates, BallDetection, Candidate, PixelBox};
pub use circle::{detect_centre_circle, CircleDetection};
pub use color::{yuyv_to_hsv, Hsv, HsvImage};
pub use disc::{disc_hypotheses, DiscHypothesis};
pub use frame::{write_ppm, CameraFrame, FrameError};
pub use integral::{build_integral, IntegralImage};
pub use lines::{detect_line_sets, detect_lines, detect_segments, merge_segments, LineDetection, LineSegment2D};
pub use mask::Mask;
pub use pipeline::{run_pipeline, run_pipeline_with_horizon, PipelineOutput, StageTimings, VisionResult};
