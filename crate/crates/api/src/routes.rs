use std::collections::BTreeSet;
use std::convert::Infallible;

use axum::extract::{FromRequest, Path, Query, Request, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::IntoResponse;
use axum::routing::{get, post, MethodRouter};
use axum::{Json, Router};
use chrono::{DateTime, Duration, NaiveDate, Utc};
use futures::Stream;
use rental_core::arc::{self, AdvanceResult, ProcessResult};
use rental_core::ledger::Template;
use rental_core::mi::{
    self, AvailableArbitrators, Decision, InviteArbitrators, MediationAssessment, MiReport,
    MiResult, Poll, Responsibility, VisitReport,
};
use rental_core::rental::{self, House, Iou, LaCreationRequest, LeaseAgreement, LeaseTerms, Proposal};
use rental_core::store::StoreEntry;
use rental_core::{ContractId, Money, Party};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tokio::sync::broadcast::error::RecvError;

use crate::error::{ApiError, ApiResult};
use crate::state::{decode, AppState, Ctx};

/// `Json` whose rejections use the API error body.
pub struct Body<T>(pub T);

impl<S: Send + Sync, T: DeserializeOwned> FromRequest<S> for Body<T> {
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, ApiError> {
        let Json(v) = Json::<T>::from_request(req, state).await?;
        Ok(Body(v))
    }
}

type P1 = Path<String>;
type P2 = Path<(String, u64)>;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .route("/admin/clock", get(clock).post(set_clock))
        .route("/admin/parties", get(parties).post(allocate))
        .route("/admin/config", get(config))
        .route("/api/{party}/contracts", get(contracts))
        .route("/api/{party}/contracts/{id}", get(contract))
        .route("/api/{party}/events", get(events))
        .route("/api/{party}/proposals", list(Proposal::NAME).post(propose))
        .route("/api/{party}/proposals/{id}", one(Proposal::NAME))
        .route("/api/{party}/proposals/{id}/accept", post(accept))
        .route("/api/{party}/proposals/{id}/decline", post(decline))
        .route("/api/{party}/proposals/{id}/withdraw", post(withdraw))
        .route("/api/{party}/requests", list(LaCreationRequest::NAME))
        .route("/api/{party}/requests/{id}", one(LaCreationRequest::NAME))
        .route("/api/{party}/requests/{id}/approve", post(approve))
        .route("/api/{party}/lease-agreements", list(LeaseAgreement::NAME))
        .route("/api/{party}/lease-agreements/{id}", one(LeaseAgreement::NAME))
        .route("/api/{party}/lease-agreements/{id}/mis", post(create_mi))
        .route("/api/{party}/ious", list(Iou::NAME))
        .route("/api/{party}/mis", list(MiReport::NAME))
        .route("/api/{party}/mis/{id}", one(MiReport::NAME))
        .route("/api/{party}/mis/{id}/assessments", post(assess))
        .route("/api/{party}/mis/{id}/arbitration", post(arbitration))
        .route("/api/{party}/mis/{id}/polls", post(create_poll))
        .route("/api/{party}/mediation", list(MediationAssessment::NAME))
        .route("/api/{party}/mediation/{id}", one(MediationAssessment::NAME))
        .route("/api/{party}/mediation/{id}/accept", post(accept_assessment))
        .route("/api/{party}/mediation/{id}/reject", post(reject_assessment))
        .route("/api/{party}/invitations", list(InviteArbitrators::NAME))
        .route("/api/{party}/invitations/{id}", one(InviteArbitrators::NAME))
        .route("/api/{party}/invitations/{id}/accept", post(accept_invitation))
        .route("/api/{party}/invitations/{id}/decline", post(decline_invitation))
        .route("/api/{party}/invitations/{id}/confirm", post(confirm))
        .route("/api/{party}/polls", list(Poll::NAME))
        .route("/api/{party}/polls/{id}", one(Poll::NAME))
        .route("/api/{party}/polls/{id}/vote", post(vote))
        .route("/api/{party}/polls/{id}/finalize", post(finalize))
        .route("/api/{party}/results", list(MiResult::NAME))
        .route("/api/{party}/results/{id}", one(MiResult::NAME))
        .route(
            "/api/{party}/available-arbitrators",
            list(AvailableArbitrators::NAME).post(publish),
        )
        .route(
            "/api/{party}/available-arbitrators/request",
            post(request_list),
        )
        .route("/api/{party}/oracle/update", get(current_update))
        .route("/api/{party}/oracle/advance", post(advance))
        .route("/api/{party}/oracle/process", post(process))
        .route("/api/{party}/oracle/providers", post(add_provider))
        .route("/api/{party}/oracle/providers/accept", post(accept_provider))
        .with_state(state)
}

/// Response to a command that created a contract.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Created {
    pub contract_id: ContractId,
    /// `None` when the caller is not a stakeholder of the new contract.
    pub external_id: Option<u64>,
}

impl Created {
    fn of(ctx: &Ctx, id: ContractId) -> Self {
        Created {
            contract_id: id,
            external_id: ctx.external_id(id),
        }
    }
}

fn created(c: Created) -> (StatusCode, Json<Created>) {
    (StatusCode::CREATED, Json(c))
}

fn list(template: &'static str) -> MethodRouter<AppState> {
    get(move |State(s): State<AppState>, Path(party): P1| async move {
        let session = s.view(&party).await?;
        ApiResult::Ok(Json(session.store().by_template(template)))
    })
}

fn one(template: &'static str) -> MethodRouter<AppState> {
    get(move |State(s): State<AppState>, Path((party, id)): P2| async move {
        let session = s.view(&party).await?;
        let e = session.store().get(id)?;
        if e.template != template {
            return Err(ApiError::new(
                "WRONG_TEMPLATE",
                format!("external id {id} is a {}, not a {template}", e.template),
            ));
        }
        Ok(Json(e))
    })
}

#[derive(Deserialize)]
struct TemplateFilter {
    template: Option<String>,
}

async fn contracts(
    State(s): State<AppState>,
    Path(party): P1,
    Query(q): Query<TemplateFilter>,
) -> ApiResult<Json<Vec<StoreEntry>>> {
    let session = s.view(&party).await?;
    let store = session.store();
    Ok(Json(match q.template {
        Some(t) => store.by_template(&t),
        None => store.entries(),
    }))
}

async fn contract(State(s): State<AppState>, Path((party, id)): P2) -> ApiResult<Json<StoreEntry>> {
    Ok(Json(s.view(&party).await?.store().get(id)?))
}

async fn events(
    State(s): State<AppState>,
    Path(party): P1,
) -> ApiResult<Sse<impl Stream<Item = Result<Event, Infallible>>>> {
    let rx = s.session(&party)?.subscribe();
    let stream = futures::stream::unfold(rx, |mut rx| async move {
        let ev = match rx.recv().await {
            Ok(ev) => Event::default()
                .event(ev.name())
                .json_data(&ev)
                .unwrap_or_else(|_| Event::default().event("error")),
            // The client fell behind the feed; it should refetch the store.
            Err(RecvError::Lagged(n)) => Event::default().event("resync").data(n.to_string()),
            Err(RecvError::Closed) => return None,
        };
        Some((Ok(ev), rx))
    });
    Ok(Sse::new(stream).keep_alive(KeepAlive::default()))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClockState {
    pub now: DateTime<Utc>,
    pub date: NaiveDate,
    pub manual: bool,
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ClockChange {
    pub set: Option<DateTime<Utc>>,
    pub advance_seconds: Option<i64>,
}

fn clock_state(s: &AppState) -> ClockState {
    let now = s.ledger.now();
    ClockState {
        now,
        date: now.date_naive(),
        manual: s.clock.is_some(),
    }
}

async fn clock(State(s): State<AppState>) -> Json<ClockState> {
    Json(clock_state(&s))
}

async fn set_clock(
    State(s): State<AppState>,
    Body(change): Body<ClockChange>,
) -> ApiResult<Json<ClockState>> {
    let clock = s.clock.as_ref().ok_or_else(|| {
        ApiError::new("CLOCK_NOT_MANUAL", "the server runs on the system clock")
    })?;
    if let Some(t) = change.set {
        clock.set(t);
    }
    if let Some(secs) = change.advance_seconds {
        clock.advance(Duration::seconds(secs));
    }
    Ok(Json(clock_state(&s)))
}

async fn parties(State(s): State<AppState>) -> Json<Vec<Party>> {
    Json(s.ledger.parties().into_iter().collect())
}

#[derive(Deserialize)]
struct NewParty {
    name: String,
}

async fn allocate(
    State(s): State<AppState>,
    Body(p): Body<NewParty>,
) -> ApiResult<impl IntoResponse> {
    let party = s.ledger.allocate_party(p.name)?;
    Ok((StatusCode::CREATED, Json(party)))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ConfigView {
    pub operator: Party,
    pub provider: Party,
    pub lifecycler: Party,
    pub public: Option<Party>,
}

async fn config(State(s): State<AppState>) -> Json<ConfigView> {
    Json(ConfigView {
        operator: s.operator.clone(),
        provider: s.provider.clone(),
        lifecycler: s.lifecycler.clone(),
        public: s.ledger.public_party().cloned(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProposalRequest {
    pub landlord: Party,
    pub house_id: String,
    #[serde(default)]
    pub address: String,
    pub rent: Money,
    pub begin_date: NaiveDate,
    pub payment_dates: BTreeSet<NaiveDate>,
    #[serde(default = "one_arbitrator")]
    pub num_arbitrators: u32,
}

fn one_arbitrator() -> u32 {
    1
}

async fn propose(
    State(s): State<AppState>,
    Path(party): P1,
    Body(req): Body<ProposalRequest>,
) -> ApiResult<impl IntoResponse> {
    let operator = s.operator.clone();
    let c = s
        .command(&party, move |ctx| {
            let p = Proposal {
                tenant: ctx.party().clone(),
                landlord: req.landlord.clone(),
                operator,
                house: House {
                    house_id: req.house_id,
                    address: req.address,
                    landlord: req.landlord,
                },
                terms: LeaseTerms {
                    rent: req.rent,
                    begin_date: req.begin_date,
                    payment_dates: req.payment_dates,
                    num_arbitrators: req.num_arbitrators,
                },
            };
            let id = rental::submit_proposal(&ctx.sub(), &p)?;
            Ok(Created::of(ctx, id))
        })
        .await?;
    Ok(created(c))
}

/// Runs a choice on the contract behind an external id and reports the
/// contract it returned.
async fn create_via(
    s: AppState,
    party: String,
    id: u64,
    template: &'static str,
    f: impl FnOnce(&Ctx, ContractId) -> rental_core::ledger::Result<ContractId> + Send + 'static,
) -> ApiResult<(StatusCode, Json<Created>)> {
    let c = s
        .command(&party, move |ctx| {
            let cid = ctx.contract(id, template)?;
            let new = f(ctx, cid)?;
            Ok(Created::of(ctx, new))
        })
        .await?;
    Ok(created(c))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Archived {
    pub archived: ContractId,
}

async fn archive_via(
    s: AppState,
    party: String,
    id: u64,
    template: &'static str,
    f: impl FnOnce(&Ctx, ContractId) -> rental_core::ledger::Result<()> + Send + 'static,
) -> ApiResult<Json<Archived>> {
    s.command(&party, move |ctx| {
        let cid = ctx.contract(id, template)?;
        f(ctx, cid)?;
        Ok(Json(Archived { archived: cid }))
    })
    .await
}

async fn accept(State(s): State<AppState>, Path((party, id)): P2) -> ApiResult<impl IntoResponse> {
    create_via(s, party, id, Proposal::NAME, |ctx, p| rental::accept(&ctx.sub(), p)).await
}

async fn decline(State(s): State<AppState>, Path((party, id)): P2) -> ApiResult<impl IntoResponse> {
    archive_via(s, party, id, Proposal::NAME, |ctx, p| rental::decline(&ctx.sub(), p)).await
}

async fn withdraw(State(s): State<AppState>, Path((party, id)): P2) -> ApiResult<impl IntoResponse> {
    archive_via(s, party, id, Proposal::NAME, |ctx, p| rental::withdraw(&ctx.sub(), p)).await
}

async fn approve(State(s): State<AppState>, Path((party, id)): P2) -> ApiResult<impl IntoResponse> {
    create_via(s, party, id, LaCreationRequest::NAME, |ctx, r| {
        rental::approve(&ctx.sub(), r)
    })
    .await
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MiRequest {
    pub description: String,
    pub starting_date: NaiveDate,
}

async fn create_mi(
    State(s): State<AppState>,
    Path((party, id)): P2,
    Body(req): Body<MiRequest>,
) -> ApiResult<impl IntoResponse> {
    create_via(s, party, id, LeaseAgreement::NAME, move |ctx, la| {
        mi::create_mi(&ctx.sub(), la, ctx.party(), &req.description, req.starting_date)
    })
    .await
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AssessmentRequest {
    pub responsibility: Responsibility,
    pub cost: Money,
}

async fn assess(
    State(s): State<AppState>,
    Path((party, id)): P2,
    Body(req): Body<AssessmentRequest>,
) -> ApiResult<impl IntoResponse> {
    create_via(s, party, id, MiReport::NAME, move |ctx, report| {
        mi::submit_assessment(&ctx.sub(), report, ctx.party(), req.responsibility, req.cost)
    })
    .await
}

async fn accept_assessment(
    State(s): State<AppState>,
    Path((party, id)): P2,
) -> ApiResult<impl IntoResponse> {
    create_via(s, party, id, MediationAssessment::NAME, |ctx, a| {
        let r = mi::resolve_mediation(&ctx.sub(), a, Decision::Accept)?;
        Ok(r.expect("accepting yields a result"))
    })
    .await
}

async fn reject_assessment(
    State(s): State<AppState>,
    Path((party, id)): P2,
) -> ApiResult<impl IntoResponse> {
    archive_via(s, party, id, MediationAssessment::NAME, |ctx, a| {
        mi::resolve_mediation(&ctx.sub(), a, Decision::Reject).map(|_| ())
    })
    .await
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ArbitrationStarted {
    pub invitation: Created,
    pub mi_report: Created,
}

/// Starts arbitration on a maintenance issue. The lease is found through
/// the report's lease key, and the caller's private copy of the operator's
/// arbitrator list is obtained first if the caller has none.
async fn arbitration(
    State(s): State<AppState>,
    Path((party, id)): P2,
) -> ApiResult<impl IntoResponse> {
    let started = s
        .command(&party, move |ctx| {
            let report_id = ctx.contract(id, MiReport::NAME)?;
            let report: MiReport = ctx.decode(id, MiReport::NAME)?;
            let store = ctx.session.store();
            let lease = store
                .by_template(LeaseAgreement::NAME)
                .into_iter()
                .find(|e| {
                    decode::<LeaseAgreement>(e.payload.clone())
                        .is_ok_and(|la| la.la_key() == report.la_key)
                })
                .ok_or_else(|| {
                    ApiError::new("NOT_FOUND", "no active lease for this maintenance issue")
                })?;
            let operator = &ctx.state.operator;
            let private = store
                .by_template(AvailableArbitrators::NAME)
                .into_iter()
                .find(|e| {
                    decode::<AvailableArbitrators>(e.payload.clone())
                        .is_ok_and(|a| &a.operator == operator && a.observers.contains(ctx.party()))
                });
            let list = match private {
                Some(e) => e.contract_id,
                None => mi::private_arbitrator_list(ctx.ledger(), ctx.party(), operator)?,
            };
            let r = mi::invoke_arbitrators(
                &ctx.sub(),
                lease.contract_id,
                ctx.party(),
                list,
                report_id,
            )?;
            Ok(ArbitrationStarted {
                invitation: Created::of(ctx, r.invitation),
                mi_report: Created::of(ctx, r.mi_report),
            })
        })
        .await?;
    Ok((StatusCode::CREATED, Json(started)))
}

async fn accept_invitation(
    State(s): State<AppState>,
    Path((party, id)): P2,
) -> ApiResult<impl IntoResponse> {
    create_via(s, party, id, InviteArbitrators::NAME, |ctx, inv| {
        mi::accept_invitation(&ctx.sub(), inv, ctx.party())
    })
    .await
}

async fn decline_invitation(
    State(s): State<AppState>,
    Path((party, id)): P2,
) -> ApiResult<impl IntoResponse> {
    create_via(s, party, id, InviteArbitrators::NAME, |ctx, inv| {
        mi::decline_invitation(&ctx.sub(), inv, ctx.party())
    })
    .await
}

async fn confirm(State(s): State<AppState>, Path((party, id)): P2) -> ApiResult<impl IntoResponse> {
    create_via(s, party, id, InviteArbitrators::NAME, |ctx, inv| {
        mi::confirm_attribution(&ctx.sub(), inv, ctx.party())
    })
    .await
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PollRequest {
    #[serde(flatten)]
    pub visit: VisitReport,
    pub vote: Responsibility,
}

async fn create_poll(
    State(s): State<AppState>,
    Path((party, id)): P2,
    Body(req): Body<PollRequest>,
) -> ApiResult<impl IntoResponse> {
    create_via(s, party, id, MiReport::NAME, move |ctx, report| {
        mi::create_poll(&ctx.sub(), report, ctx.party(), req.visit, req.vote)
    })
    .await
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VoteRequest {
    pub responsibility: Responsibility,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Voted {
    pub poll: Created,
    /// Every voter has voted; the poll can be finalized.
    pub complete: bool,
}

async fn vote(
    State(s): State<AppState>,
    Path((party, id)): P2,
    Body(req): Body<VoteRequest>,
) -> ApiResult<impl IntoResponse> {
    let voted = s
        .command(&party, move |ctx| {
            let poll = ctx.contract(id, Poll::NAME)?;
            let new = mi::vote(&ctx.sub(), poll, ctx.party(), req.responsibility)?;
            let p: Poll = ctx.sub().fetch(new)?;
            Ok(Voted {
                poll: Created::of(ctx, new),
                complete: p.already_voted == p.voters,
            })
        })
        .await?;
    Ok((StatusCode::CREATED, Json(voted)))
}

async fn finalize(State(s): State<AppState>, Path((party, id)): P2) -> ApiResult<impl IntoResponse> {
    create_via(s, party, id, Poll::NAME, |ctx, poll| {
        mi::finalize_votation(&ctx.sub(), poll, ctx.party())
    })
    .await
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PublishRequest {
    pub arbitrators: BTreeSet<Party>,
}

async fn publish(
    State(s): State<AppState>,
    Path(party): P1,
    Body(req): Body<PublishRequest>,
) -> ApiResult<impl IntoResponse> {
    let c = s
        .command(&party, move |ctx| {
            let id = mi::publish_arbitrators(ctx.ledger(), ctx.party(), req.arbitrators)?;
            Ok(Created::of(ctx, id))
        })
        .await?;
    Ok(created(c))
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ListRequest {
    /// Defaults to the server's operator.
    pub operator: Option<Party>,
}

async fn request_list(
    State(s): State<AppState>,
    Path(party): P1,
    body: Option<Json<ListRequest>>,
) -> ApiResult<impl IntoResponse> {
    let operator = body
        .and_then(|Json(b)| b.operator)
        .unwrap_or_else(|| s.operator.clone());
    let c = s
        .command(&party, move |ctx| {
            let id = mi::private_arbitrator_list(ctx.ledger(), ctx.party(), &operator)?;
            Ok(Created::of(ctx, id))
        })
        .await?;
    Ok(created(c))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CurrentUpdate {
    pub contract_id: ContractId,
    pub date: NaiveDate,
}

async fn current_update(
    State(s): State<AppState>,
    Path(party): P1,
) -> ApiResult<Json<CurrentUpdate>> {
    s.session(&party)?;
    let (id, dcu) = arc::current_update(&s.ledger, &s.operator)?;
    Ok(Json(CurrentUpdate {
        contract_id: id,
        date: dcu.date,
    }))
}

async fn advance(State(s): State<AppState>, Path(party): P1) -> ApiResult<Json<AdvanceResult>> {
    let operator = s.operator.clone();
    s.command(&party, move |ctx| {
        Ok(Json(arc::advance(&ctx.sub(), &operator, ctx.party())?))
    })
    .await
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProcessRequest {
    /// The date clock update to lifecycle against; the current one if
    /// omitted.
    pub update: Option<ContractId>,
}

async fn process(
    State(s): State<AppState>,
    Path(party): P1,
    body: Option<Json<ProcessRequest>>,
) -> ApiResult<Json<ProcessResult>> {
    let operator = s.operator.clone();
    let update = body.and_then(|Json(b)| b.update);
    s.command(&party, move |ctx| {
        let update = match update {
            Some(u) => u,
            None => arc::current_update(ctx.ledger(), &operator)?.0,
        };
        Ok(Json(arc::process_event(
            &ctx.sub(),
            &operator,
            ctx.party(),
            update,
        )?))
    })
    .await
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProviderRequest {
    pub provider: Party,
}

async fn add_provider(
    State(s): State<AppState>,
    Path(party): P1,
    Body(req): Body<ProviderRequest>,
) -> ApiResult<impl IntoResponse> {
    let c = s
        .command(&party, move |ctx| {
            let op = ctx.party().clone();
            let id = arc::add_provider(&ctx.sub(), &op, &req.provider)?;
            Ok(Created::of(ctx, id))
        })
        .await?;
    Ok(created(c))
}

async fn accept_provider(State(s): State<AppState>, Path(party): P1) -> ApiResult<impl IntoResponse> {
    let operator = s.operator.clone();
    let c = s
        .command(&party, move |ctx| {
            let id = arc::accept_provider(&ctx.sub(), &operator, ctx.party())?;
            Ok(Created::of(ctx, id))
        })
        .await?;
    Ok(created(c))
}
