//! Kitchen activity fusion: keypoint action classification with a
//! from-scratch LSTM, detection metrics, and a staged pipeline that fuses
//! objects, actions and speech into a recipe prompt.

pub mod dataset;
pub mod detection;
pub mod features;
pub mod keypoints;
pub mod lstm;
pub mod pipeline;
