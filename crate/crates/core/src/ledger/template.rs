use std::collections::BTreeMap;
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use super::error::{LedgerError, Result};
use super::transaction::{ContractId, ContractKey};
use super::update::Update;
use crate::party::PartySet;

/// A typed contract template.
///
/// The typed form is what workflow code authors against; the engine only
/// ever sees the erased [`TemplateDescriptor`] built from it.
pub trait Template: Serialize + DeserializeOwned + Clone + Send + Sync + 'static {
    const NAME: &'static str;

    fn signatories(&self) -> PartySet;

    fn observers(&self) -> PartySet {
        PartySet::new()
    }

    /// The key value, if the template is keyed. Scoped to [`Self::NAME`].
    fn key(&self) -> Option<ContractKey> {
        None
    }

    /// Payload invariant checked on every creation.
    fn ensure(&self) -> std::result::Result<(), String> {
        Ok(())
    }
}

pub(crate) fn decode<T: DeserializeOwned>(value: &Value) -> Result<T> {
    T::deserialize(value).map_err(|e| LedgerError::InvalidPayload(e.to_string()))
}

pub(crate) fn encode<T: Serialize>(value: &T) -> Result<Value> {
    serde_json::to_value(value).map_err(|e| LedgerError::InvalidPayload(e.to_string()))
}

type PartiesFn = Arc<dyn Fn(&Value) -> Result<PartySet> + Send + Sync>;
type KeyFn = Arc<dyn Fn(&Value) -> Result<Option<ContractKey>> + Send + Sync>;
type AdmitFn = Arc<dyn Fn(&Value) -> Result<Admitted> + Send + Sync>;
type ControllersFn = Arc<dyn Fn(&Value, &Value) -> Result<PartySet> + Send + Sync>;
pub(crate) type BodyFn =
    Arc<dyn Fn(&mut Update<'_>, ContractId, &Value, &Value) -> Result<Value> + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Consuming {
    Consuming,
    NonConsuming,
}

#[derive(Clone)]
pub struct ChoiceDescriptor {
    pub name: String,
    pub consuming: bool,
    /// Whether the public party may appear among the submitting parties.
    pub public_actable: bool,
    pub(crate) controllers: ControllersFn,
    pub(crate) body: BodyFn,
}

impl ChoiceDescriptor {
    pub fn controllers(&self, payload: &Value, argument: &Value) -> Result<PartySet> {
        (self.controllers)(payload, argument)
    }
}

/// A payload accepted for creation.
#[derive(Clone, Debug)]
pub struct Admitted {
    pub payload: Value,
    pub signatories: PartySet,
    pub observers: PartySet,
    pub key: Option<ContractKey>,
}

/// Erased template: payload schema validation, stakeholder rules, key and
/// choices.
#[derive(Clone)]
pub struct TemplateDescriptor {
    pub name: String,
    signatories: PartiesFn,
    observers: PartiesFn,
    key: KeyFn,
    admit: AdmitFn,
    choices: BTreeMap<String, ChoiceDescriptor>,
}

impl TemplateDescriptor {
    pub fn of<T: Template>() -> Self {
        TemplateDescriptor {
            name: T::NAME.to_owned(),
            signatories: Arc::new(|v| Ok(decode::<T>(v)?.signatories())),
            observers: Arc::new(|v| Ok(decode::<T>(v)?.observers())),
            key: Arc::new(|v| Ok(decode::<T>(v)?.key())),
            admit: Arc::new(|v| {
                let typed = decode::<T>(v)?;
                typed.ensure().map_err(LedgerError::Precondition)?;
                Ok(Admitted {
                    payload: encode(&typed)?,
                    signatories: typed.signatories(),
                    observers: typed.observers(),
                    key: typed.key(),
                })
            }),
            choices: BTreeMap::new(),
        }
    }

    /// Registers a choice. `controllers` may reject the argument outright,
    /// which is reported before any visibility check.
    pub fn choice<T, A, R, C, B>(
        mut self,
        name: &str,
        consuming: Consuming,
        controllers: C,
        body: B,
    ) -> Self
    where
        T: Template,
        A: DeserializeOwned + 'static,
        R: Serialize + 'static,
        C: Fn(&T, &A) -> Result<PartySet> + Send + Sync + 'static,
        B: Fn(&mut Update<'_>, ContractId, T, A) -> Result<R> + Send + Sync + 'static,
    {
        assert_eq!(
            self.name,
            T::NAME,
            "choice registered on the wrong template"
        );
        let controllers: ControllersFn = Arc::new(move |payload, arg| {
            let this = decode::<T>(payload)?;
            let arg = decode::<A>(arg)?;
            controllers(&this, &arg)
        });
        let body: BodyFn = Arc::new(move |upd, self_id, payload, arg| {
            let this = decode::<T>(payload)?;
            let arg = decode::<A>(arg)?;
            encode(&body(upd, self_id, this, arg)?)
        });
        self.choices.insert(
            name.to_owned(),
            ChoiceDescriptor {
                name: name.to_owned(),
                consuming: consuming == Consuming::Consuming,
                public_actable: false,
                controllers,
                body,
            },
        );
        self
    }

    /// Marks `choice` as exercisable with the public
    /// party among the submitters.
    pub fn public_actable(mut self, choice: &str) -> Self {
        self.choices
            .get_mut(choice)
            .expect("public_actable on unknown choice")
            .public_actable = true;
        self
    }

    pub fn signatories(&self, payload: &Value) -> Result<PartySet> {
        (self.signatories)(payload)
    }

    pub fn observers(&self, payload: &Value) -> Result<PartySet> {
        (self.observers)(payload)
    }

    pub fn key(&self, payload: &Value) -> Result<Option<ContractKey>> {
        (self.key)(payload)
    }

    /// Checks the payload against the schema and invariant, returning its
    /// normalized form.
    pub fn validate(&self, payload: &Value) -> Result<Value> {
        Ok((self.admit)(payload)?.payload)
    }

    /// Validation plus stakeholders and key, from a single decode.
    pub fn admit(&self, payload: &Value) -> Result<Admitted> {
        (self.admit)(payload)
    }

    pub fn choice_named(&self, name: &str) -> Result<&ChoiceDescriptor> {
        self.choices
            .get(name)
            .ok_or_else(|| LedgerError::UnknownChoice {
                template: self.name.clone(),
                choice: name.to_owned(),
            })
    }

    pub fn choice_names(&self) -> impl Iterator<Item = &str> {
        self.choices.keys().map(String::as_str)
    }
}

/// The set of templates a ledger can run.
#[derive(Clone, Default)]
pub struct Package {
    templates: BTreeMap<String, TemplateDescriptor>,
}

impl Package {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, template: TemplateDescriptor) -> Self {
        self.add(template);
        self
    }

    pub fn add(&mut self, template: TemplateDescriptor) {
        let prev = self.templates.insert(template.name.clone(), template);
        assert!(prev.is_none(), "template registered twice");
    }

    pub fn template(&self, name: &str) -> Result<&TemplateDescriptor> {
        self.templates
            .get(name)
            .ok_or_else(|| LedgerError::UnknownTemplate(name.to_owned()))
    }

    pub fn template_names(&self) -> impl Iterator<Item = &str> {
        self.templates.keys().map(String::as_str)
    }
}
