/// How a command failed, which decides the exit code.
#[derive(Debug)]
pub enum Failure {
    /// Some records or methods failed; exit 1.
    Partial(String),
    /// Bad arguments, configuration or input format; exit 2.
    Usage(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.into())
    }
}

pub type CmdResult = Result<(), Failure>;
