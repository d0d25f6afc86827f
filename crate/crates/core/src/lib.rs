pub mod forge;
pub mod numrange;
pub mod seqspace;
pub mod verify;
