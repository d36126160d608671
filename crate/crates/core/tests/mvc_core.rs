mod common;

use mvc_triads::bus::{DiagnosticKind, Payload};
use mvc_triads::demos::{DemoDescriptor, DemoName, DemoOptions, PHONE_MASK};
use mvc_triads::model::{ports, PortCall, PortVerb};
use mvc_triads::testkit::audit;
use mvc_triads::triad::{options, MASKED_FIELD};
use mvc_triads::validation::Rule;
use mvc_triads::{
    AssembleError, AttachError, CommandName, ComponentId, ComponentKind, DispatchError, Disposition,
    Gesture, Pattern, PropertyValue, RenderCommand, Schema, Session, TriadSpec, ValueKind,
};

fn phone_spec(mask: &str) -> TriadSpec {
    let schema = Schema::of(&[("phone", ValueKind::Text)]).unwrap();
    TriadSpec::new(Pattern::PassiveView, schema, MASKED_FIELD).with_option(options::MASK, mask)
}

fn person_schema() -> Schema {
    Schema::of(&[("name", ValueKind::Text), ("age", ValueKind::Integer)]).unwrap()
}

#[test]
fn passive_view_handle_has_no_view_port() {
    let mut s = Session::default();
    let h = s.assemble_triad(phone_spec("##-##")).unwrap();
    assert!(h.view_port.is_none());
    assert!(h.controller_port.has_mutators());
    assert_eq!(h.views.len(), 1);
}

#[test]
fn open_model_with_service_is_a_wiring_error() {
    let spec = TriadSpec::new(Pattern::OpenModel, person_schema(), "grid").with_service("people");
    let mut s = Session::default();
    assert!(matches!(s.assemble_triad(spec), Err(AssembleError::Wiring(_))));
    let diags = s.bus().diagnostics();
    assert_eq!(diags.last().unwrap().kind, DiagnosticKind::WiringError);
}

#[test]
fn duplicate_property_is_a_schema_error() {
    assert!(Schema::of(&[("a", ValueKind::Text), ("a", ValueKind::Integer)]).is_err());
}

#[test]
fn pager_first_render_is_busy() {
    let (session, ids) = DemoDescriptor::get(DemoName::Pager)
        .launch(DemoOptions::default())
        .unwrap();
    let first = &session.rendered()[0];
    assert_eq!(first.command, RenderCommand::ShowBusy { busy: true });
    assert_eq!(first.view, session.views(ids[0])[0].id);
    let first_msg = &session.bus().log()[0];
    assert_eq!((first_msg.tick, first_msg.seq), (0, 0));
    assert_eq!(first_msg.verb, "show_busy");
}

#[test]
fn key_on_empty_mask_buffer() {
    let mut s = Session::default();
    let h = s.assemble_triad(phone_spec("##-##")).unwrap();
    let out = s.dispatch(h.id, Gesture::Key('3')).unwrap();
    assert_eq!(out, [RenderCommand::set_char_at("phone", 0, '3')]);
}

#[test]
fn sheet_edit_reaches_every_window() {
    let (mut s, ids) = DemoDescriptor::get(DemoName::Sheet)
        .launch(DemoOptions::default())
        .unwrap();
    s.dispatch(ids[0], Gesture::Command(CommandName::NewWindow)).unwrap();
    let out = s.dispatch(ids[0], Gesture::edit("A1", "=()")).unwrap();
    let expected = RenderCommand::set_text("A1", "=()");
    assert_eq!(out, [expected.clone(), expected]);
}

#[test]
fn second_open_is_refused_without_state_change() {
    for demo in [DemoName::Masked, DemoName::Refdata] {
        let (mut s, ids) = DemoDescriptor::get(demo).launch(DemoOptions::default()).unwrap();
        s.dispatch(ids[0], Gesture::Command(CommandName::Open)).unwrap();
        s.run_until_idle();
        let before = (s.model(ids[0]).snapshot().clone(), s.rendered().len());
        let err = s.dispatch(ids[0], Gesture::Command(CommandName::Open)).unwrap_err();
        assert!(matches!(err, DispatchError::UnknownGesture { .. }), "{demo:?}");
        assert_eq!((s.model(ids[0]).snapshot().clone(), s.rendered().len()), before);
    }
}

#[test]
fn next_page_on_a_form_is_unknown() {
    let (mut s, ids) = DemoDescriptor::get(DemoName::Form).launch(DemoOptions::default()).unwrap();
    let log = s.bus().log().len();
    let err = s.dispatch(ids[0], Gesture::Command(CommandName::NextPage)).unwrap_err();
    assert!(matches!(err, DispatchError::UnknownGesture { .. }));
    // reported on the side channel, not to the view
    assert_eq!(s.bus().diagnostics().last().unwrap().kind, DiagnosticKind::UnhandledEvent);
    assert!(s.bus().log()[log..]
        .iter()
        .all(|e| e.target.kind != ComponentKind::View));
}

#[test]
fn new_window_shows_illegal_content() {
    let (mut s, ids) = DemoDescriptor::get(DemoName::Sheet).launch(DemoOptions::default()).unwrap();
    s.dispatch(ids[0], Gesture::edit("A1", "=()")).unwrap();
    let view = s.attach_view(ids[0], "grid").unwrap();
    let renders = s.renders_for(view);
    assert_eq!(renders[0], RenderCommand::set_text("A1", "=()"));
}

#[test]
fn attach_on_single_view_patterns_fails_silently() {
    for demo in [DemoName::Masked, DemoName::Form, DemoName::Pager] {
        let (mut s, ids) = DemoDescriptor::get(demo).launch(DemoOptions::default()).unwrap();
        let before = audit(&s.run_log());
        let err = s.attach_view(ids[0], "extra").unwrap_err();
        assert!(matches!(err, AttachError::PatternForbidsMultiView(_)));
        assert_eq!(audit(&s.run_log()), before);
        assert_eq!(s.views(ids[0]).len(), 1);
    }
}

#[test]
fn active_view_three_windows_get_identical_changes() {
    let spec = TriadSpec::new(Pattern::ActiveView, person_schema(), "card");
    let mut s = Session::default();
    let id = s.assemble_triad(spec).unwrap().id;
    s.attach_view(id, "card").unwrap();
    s.attach_view(id, "card").unwrap();
    let views: Vec<ComponentId> = s.views(id).iter().map(|v| v.id).collect();
    assert_eq!(views.len(), 3);
    let marks: Vec<usize> = views.iter().map(|v| s.renders_for(*v).len()).collect();
    s.dispatch(id, Gesture::edit("name", "Ada")).unwrap();
    let changes: Vec<Vec<RenderCommand>> = views
        .iter()
        .zip(marks)
        .map(|(v, m)| s.renders_for(*v)[m..].to_vec())
        .collect();
    assert_eq!(changes[0], [RenderCommand::set_text("name", "Ada")]);
    assert!(changes.iter().all(|c| *c == changes[0]));
}

#[test]
fn port_segregation() {
    let (closed_ctl, closed_view) = ports(Pattern::ClosedModel);
    let closed_view = closed_view.unwrap();
    assert!(closed_view.verbs.iter().all(|v| !v.is_mutating()));
    assert!(closed_ctl.has_mutators());
    let (open_ctl, open_view) = ports(Pattern::OpenModel);
    assert!(open_ctl.exposes(PortVerb::Validate));
    assert!(!open_view.unwrap().exposes(PortVerb::Validate));
    for p in Pattern::ALL {
        let (_, view) = ports(p);
        assert_eq!(view.is_none(), p == Pattern::PassiveView);
    }
}

#[test]
fn view_read_port_returns_committed_values() {
    let (mut s, ids) = DemoDescriptor::get(DemoName::Form).launch(DemoOptions::default()).unwrap();
    s.dispatch(ids[0], Gesture::edit("age", "40")).unwrap();
    let reply = s.view_call(ids[0], 0, PortCall::Get("age".into())).unwrap();
    // the edit is still in the view cache
    assert_eq!(reply, mvc_triads::model::PortReply::Value(PropertyValue::Integer(36)));
}

#[test]
fn mutating_view_calls_are_rejected_by_the_bus() {
    for demo in [DemoName::Form, DemoName::Sheet, DemoName::Refdata] {
        let (mut s, ids) = DemoDescriptor::get(demo).launch(DemoOptions::default()).unwrap();
        s.run_until_idle();
        let before = s.model(ids[0]).snapshot().digest();
        let prop = s.spec(ids[0]).schema.names().nth(1).unwrap().to_string();
        for call in [
            PortCall::Set(prop.clone(), PropertyValue::text("x")),
            PortCall::Mutate(prop.clone(), PropertyValue::text("x")),
            PortCall::MutateBatch(vec![(prop.clone(), PropertyValue::text("x"))]),
            PortCall::Save,
        ] {
            let err = s.view_call(ids[0], 0, call).unwrap_err();
            assert!(matches!(err, mvc_triads::ViewCallError::Forbidden(_)), "{demo:?}: {err:?}");
        }
        assert_eq!(s.model(ids[0]).snapshot().digest(), before);
        assert_eq!(s.bus().rejected().len(), 4);
    }
}

#[test]
fn escalation_two_levels() {
    let mut s = Session::default();
    let parent = s
        .assemble_triad(
            TriadSpec::new(Pattern::ClosedModel, person_schema(), "form")
                .with_rules(vec![Rule::Required("name".into())])
                .with_initial(vec![("name".into(), PropertyValue::text("Ada"))]),
        )
        .unwrap()
        .id;
    let child = s.assemble_triad(phone_spec(PHONE_MASK)).unwrap().id;
    s.set_parent(child, parent).unwrap();

    // the child owns keys
    let before = s.bus().log().len();
    s.dispatch(child, Gesture::Key('5')).unwrap();
    assert!(s.bus().log()[before..].iter().all(|e| e.verb != "forward"));

    // close belongs to the parent
    let before = s.bus().log().len();
    s.dispatch(child, Gesture::Command(CommandName::Close)).unwrap();
    let forwards: Vec<_> = s.bus().log()[before..].iter().filter(|e| e.verb == "forward").collect();
    assert_eq!(forwards.len(), 1);
    assert_eq!(forwards[0].source, ComponentId::controller(child));
    assert_eq!(forwards[0].target, ComponentId::controller(parent));
    assert!(s.views(parent)[0]
        .display
        .contains(&RenderCommand::Detach { view: s.views(parent)[0].id.to_string() }));

    // nobody handles next_page
    let err = s.dispatch(child, Gesture::Command(CommandName::NextPage)).unwrap_err();
    assert!(matches!(err, DispatchError::UnknownGesture { .. }));
    assert_eq!(s.bus().diagnostics().last().unwrap().kind, DiagnosticKind::UnhandledEvent);
}

#[test]
fn escalate_reports_disposition() {
    let mut s = Session::default();
    let parent = s
        .assemble_triad(TriadSpec::new(Pattern::ClosedModel, person_schema(), "form"))
        .unwrap()
        .id;
    let child = s.assemble_triad(phone_spec("###")).unwrap().id;
    s.set_parent(child, parent).unwrap();
    let env = |g: Gesture| mvc_triads::EventEnvelope {
        tick: 0,
        seq: 0,
        source: ComponentId::view(child, 0),
        target: ComponentId::controller(child),
        verb: g.verb().into(),
        mutating: false,
        payload: Payload::Gesture(g),
    };
    let me = ComponentId::controller(child);
    assert_eq!(s.escalate(me, &env(Gesture::Key('1'))).unwrap(), Disposition::Handled);
    assert_eq!(
        s.escalate(me, &env(Gesture::Command(CommandName::Close))).unwrap(),
        Disposition::Forwarded {
            to: ComponentId::controller(parent),
            hops: 1
        }
    );
    assert!(s.escalate(me, &env(Gesture::Command(CommandName::NextPage))).is_err());
}

#[test]
fn parent_cycles_are_refused() {
    let mut s = Session::default();
    let a = s.assemble_triad(phone_spec("#")).unwrap().id;
    let b = s.assemble_triad(phone_spec("#")).unwrap().id;
    s.set_parent(a, b).unwrap();
    assert!(s.set_parent(b, a).is_err());
    assert!(s.set_parent(a, a).is_err());
}

#[test]
fn envelopes_are_totally_ordered() {
    for demo in DemoName::ALL {
        let (s, _) = common::fuzz_demo(demo, 11, 300);
        let log = s.bus().log();
        let mut sorted = log.to_vec();
        sorted.sort_by_key(|e| (e.tick, e.seq));
        assert_eq!(sorted, log);
        let seqs: std::collections::BTreeSet<u64> = log.iter().map(|e| e.seq).collect();
        assert_eq!(seqs.len(), log.len(), "seq reused in {demo:?}");
    }
}

#[test]
fn prompts_only_come_from_controllers() {
    for demo in DemoName::ALL {
        let (s, _) = common::fuzz_demo(demo, 12, 400);
        for e in s.bus().log() {
            if let Payload::Render(RenderCommand::Prompt { .. }) = e.payload {
                assert_eq!(e.source.kind, ComponentKind::Controller);
            }
            if let Payload::Reply(r) = &e.payload {
                // nothing a view reads carries a decision for the user
                if e.target.kind == ComponentKind::View {
                    assert!(matches!(
                        r,
                        mvc_triads::model::PortReply::Value(_) | mvc_triads::model::PortReply::Snapshot(_)
                    ));
                }
            }
        }
    }
}
