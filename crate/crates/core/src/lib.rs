//! Pseudo-RGB spherical range images from multi-channel LiDAR, with instance
//! labels, a two-stage IoU tracker and detection/segmentation metrics.

pub mod annotations;
pub mod assignment;
pub mod compose;
pub mod config;
pub mod detections;
pub mod error;
pub mod evaluation;
pub mod frame;
pub mod geometry;
mod imageio;
pub mod kalman;
pub mod pipeline;
pub mod projection;
pub mod raster;
pub mod tracker;

pub use annotations::{
    parse_labelme, parse_yolo_seg, split_dataset, to_labelme, to_yolo_seg, ClassMap,
    DatasetSplit, InstanceAnnotation,
};
pub use assignment::{assign, min_cost_matching, Assignment, CostMatrix};
pub use compose::{compose_pseudo_rgb, normalize_channel, NormalizationConfig, PseudoRgbImage};
pub use config::PipelineConfig;
pub use detections::{read_detections, Detection, Detector, FileReplayDetector, StubDetector};
pub use error::{Error, ErrorCategory, Result};
pub use evaluation::{evaluate, Branch, EvalGeometry, EvalReport, GroundTruth};
pub use frame::{channel_stats, load_frame, load_points, Channel, ChannelStats, LidarFrame, RawPoint};
pub use geometry::{iou, BBox, Polygon};
pub use kalman::{kf_init, kf_predict, kf_update, KalmanState};
pub use pipeline::{bench, track_sequence, TimingReport};
pub use projection::{pointcloud_to_sri, project_point, unproject_pixel, ProjectionConfig};
pub use tracker::{TrackOutput, TrackStatus, Tracker, TrackerConfig};
