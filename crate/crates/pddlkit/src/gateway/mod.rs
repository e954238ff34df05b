//! Run-scoped access to a language model: fixture replay or live HTTP, a
//! token budget, and an append-only JSONL ledger of every exchange.

mod fixture;
mod ledger;
mod live;

use std::sync::atomic::{AtomicU64, Ordering};
use std::thread;

use pddlkit_core::llm::{Completion, CompletionRequest, LanguageModel, LlmError};

pub use fixture::{load_fixture_dir, FixtureError};
pub use ledger::{Ledger, LedgerEntry};
pub use live::{parse_reply, HttpReply, LiveModel, Transport, TransportFault, UreqTransport};

pub struct Gateway {
    model: Box<dyn LanguageModel + Send>,
    budget: Option<u64>,
    used: AtomicU64,
    ledger: Option<Ledger>,
}

impl Gateway {
    pub fn new(model: impl LanguageModel + Send + 'static) -> Self {
        Gateway {
            model: Box::new(model),
            budget: None,
            used: AtomicU64::new(0),
            ledger: None,
        }
    }

    /// Refuses further calls once `tokens` have been spent. The call that
    /// crosses the ceiling still returns.
    pub fn with_budget(mut self, tokens: Option<u64>) -> Self {
        self.budget = tokens;
        self
    }

    pub fn with_ledger(mut self, ledger: Ledger) -> Self {
        self.ledger = Some(ledger);
        self
    }

    pub fn tokens_used(&self) -> u64 {
        self.used.load(Ordering::SeqCst)
    }

    pub fn ledger(&self) -> Option<&Ledger> {
        self.ledger.as_ref()
    }

    /// Issues the requests concurrently; results come back in request order.
    pub fn complete_many(
        &self,
        requests: &[CompletionRequest],
    ) -> Vec<Result<Completion, LlmError>> {
        thread::scope(|s| {
            let handles: Vec<_> = requests
                .iter()
                .map(|r| s.spawn(move || self.complete(r)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("completion thread panicked"))
                .collect()
        })
    }
}

impl LanguageModel for Gateway {
    fn complete(&self, request: &CompletionRequest) -> Result<Completion, LlmError> {
        let result = match self.budget {
            Some(limit) if self.tokens_used() >= limit => Err(LlmError::BudgetExceeded {
                used: self.tokens_used(),
                limit,
            }),
            _ => self.model.complete(request),
        };
        if let Ok(c) = &result {
            self.used.fetch_add(c.usage.total(), Ordering::SeqCst);
        }
        if let Some(l) = &self.ledger {
            if let Err(e) = l.record(request, &result) {
                log::error!("ledger write failed: {e}");
            }
        }
        result
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use pddlkit_core::llm::{ReplayModel, Usage};

    struct Costly;

    impl LanguageModel for Costly {
        fn complete(&self, r: &CompletionRequest) -> Result<Completion, LlmError> {
            Ok(Completion {
                text: r.prompt.to_uppercase(),
                usage: Usage {
                    prompt_tokens: 60,
                    completion_tokens: 40,
                    attempts: 1,
                },
                backend: "live".into(),
            })
        }
    }

    #[test]
    fn budget_stops_after_ceiling() {
        let g = Gateway::new(Costly).with_budget(Some(150));
        let r = CompletionRequest::new("k", "p");
        assert!(g.complete(&r).is_ok());
        assert!(g.complete(&r).is_ok());
        assert_eq!(
            g.complete(&r),
            Err(LlmError::BudgetExceeded {
                used: 200,
                limit: 150
            })
        );
        assert_eq!(g.tokens_used(), 200);
    }

    #[test]
    fn fan_out_keeps_order() {
        let g = Gateway::new(ReplayModel::new().with("a", "1").with("b", "2"));
        let reqs = [
            CompletionRequest::new("b", ""),
            CompletionRequest::new("a", ""),
            CompletionRequest::new("c", ""),
        ];
        let out = g.complete_many(&reqs);
        assert_eq!(out[0].as_ref().unwrap().text, "2");
        assert_eq!(out[1].as_ref().unwrap().text, "1");
        assert!(out[2].is_err());
    }
}
