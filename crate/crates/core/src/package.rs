use crate::ledger::{Package, TemplateDescriptor};
use crate::rental::LeaseAgreement;
use crate::{arc, mi, rental};

/// Every template of the rental platform.
pub fn rental_package() -> Package {
    let lease = TemplateDescriptor::of::<LeaseAgreement>();
    let lease = arc::extend_lease_agreement(mi::extend_lease_agreement(lease));
    Package::new()
        .with(rental::proposal_template())
        .with(rental::request_template())
        .with(lease)
        .with(rental::iou_template())
        .with(arc::date_clock_template())
        .with(arc::date_clock_update_template())
        .with(arc::evolve_template())
        .with(mi::report_template())
        .with(mi::assessment_template())
        .with(mi::available_template())
        .with(mi::request_template())
        .with(mi::invitation_template())
        .with(mi::poll_template())
        .with(TemplateDescriptor::of::<mi::MiResult>())
}
