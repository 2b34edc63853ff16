use std::time::Duration;

use serde_json::Value;
use zebra_core::eval::query::{
    extract_completion, ErrorClass, ModelEndpointConfig, QueryError, QueryRequest, Transport,
};

/// Chat-completion client over blocking HTTPS.
pub struct HttpTransport {
    agent: ureq::Agent,
    config: ModelEndpointConfig,
    token: String,
}

impl HttpTransport {
    pub fn new(config: ModelEndpointConfig, token: String) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            agent,
            config,
            token,
        }
    }
}

fn classify(err: &ureq::Error) -> ErrorClass {
    match err {
        ureq::Error::Timeout(_) => ErrorClass::Timeout,
        ureq::Error::StatusCode(code) => ErrorClass::from_status(*code),
        ureq::Error::Io(_)
        | ureq::Error::HostNotFound
        | ureq::Error::ConnectionFailed
        | ureq::Error::BodyStalled => ErrorClass::Connection,
        ureq::Error::Json(_) | ureq::Error::Protocol(_) => ErrorClass::ApiError,
        _ => ErrorClass::Other,
    }
}

impl Transport for HttpTransport {
    fn complete(&self, request: &QueryRequest<'_>) -> Result<String, QueryError> {
        let body = self.config.request_body(request.prompt);
        let mut response = self
            .agent
            .post(&self.config.base_url)
            .header("Authorization", &format!("Bearer {}", self.token))
            .send_json(&body)
            .map_err(|e| QueryError::new(classify(&e), e.to_string()))?;
        let status = response.status().as_u16();
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| QueryError::new(classify(&e), e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(QueryError::new(
                ErrorClass::from_status(status),
                format!("HTTP {status}: {text}"),
            ));
        }
        let json: Value = serde_json::from_str(&text)
            .map_err(|e| QueryError::new(ErrorClass::ApiError, format!("bad response body: {e}")))?;
        extract_completion(&json)
    }
}
