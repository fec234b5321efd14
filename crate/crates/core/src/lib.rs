pub mod geometry;
pub mod harness;
pub mod lidar;
pub mod lqng;
pub mod planner;
pub mod racing_line;
pub mod reward;
pub mod rules;
pub mod track;
pub mod vehicle;
